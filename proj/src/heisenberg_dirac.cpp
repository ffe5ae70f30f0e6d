#include "qgeom/heisenberg_dirac.hpp"

#include <algorithm>
#include <stdexcept>

namespace qgeom {

static Mat kappa_matrix(const KappaFn& kappa, double t, int n) {
  if (!kappa) return Mat::Zero(n, n);
  Operator k = kappa(t);
  if (k.dim() != n) throw std::invalid_argument("kappa: dimension mismatch");
  if (!is_skew_hermitian(k.mat())) throw std::invalid_argument("kappa: not skew-Hermitian");
  return k.mat();
}

HeisenbergSystem HeisenbergSystem::pure(const Operator& H, const DensityMatrix& rho0, KappaFn kappa, double hbar) {
  if (H.dim() != rho0.dim()) throw std::invalid_argument("HeisenbergSystem: dimension mismatch");
  if (!rho0.is_pure()) throw std::invalid_argument("HeisenbergSystem: rho0 must be pure");
  HeisenbergSystem s{Operator::hermitian(H.mat()), rho0, std::move(kappa), hbar, GaugeForm::anticommutator};
  s.kappa_at(0.0);
  return s;
}

HeisenbergSystem HeisenbergSystem::mixed(const Operator& H, const DensityMatrix& rho0, KappaFn kappa, double hbar) {
  if (H.dim() != rho0.dim()) throw std::invalid_argument("HeisenbergSystem: dimension mismatch");
  HeisenbergSystem s{Operator::hermitian(H.mat()), rho0, std::move(kappa), hbar, GaugeForm::commuting};
  s.gauge_part(0.0);
  return s;
}

Mat HeisenbergSystem::kappa_at(double t) const { return kappa_matrix(kappa, t, dim()); }

Mat HeisenbergSystem::gauge_part(double t) const {
  Mat k = kappa_at(t);
  if (form == GaugeForm::anticommutator) return gauge_term(rho0.mat(), k);
  double c = commutator(k, rho0.mat()).norm();
  if (c > 1e-10 * (1.0 + k.norm())) {
    throw std::invalid_argument("HeisenbergSystem: kappa must commute with a mixed rho0 (defect " +
                                std::to_string(c) + ")");
  }
  return k;
}

Operator heisenberg_generator(const HeisenbergSystem& sys, double t) {
  Mat g = sys.gauge_part(t);
  Mat xi = -I_UNIT / sys.hbar * sys.H_H.mat() + g;
  double res = commutator(Mat(I_UNIT * sys.hbar * xi - sys.H_H.mat()), sys.rho0.mat()).norm();
  if (res > 1e-10 * std::max(1.0, sys.hbar * g.norm())) {
    throw std::runtime_error("heisenberg_generator: residual " + std::to_string(res) + " exceeds tolerance");
  }
  return Operator::skew(skew_part(xi));
}

Trajectory<Operator> evolve_heisenberg(const HeisenbergSystem& sys, const TimeGrid& grid) {
  // dH_H/dt = [H_H, xi_H]; the -i H_H / hbar part of xi_H commutes with H_H and drops out.
  auto gen = [&](double t) { return Operator::skew(sys.gauge_part(t)); };
  return integrate_adjoint(gen, sys.H_H, grid, -1);
}

namespace {

// One right-sided step U -> U V with V = exp(-i H_H h / hbar) exp(h G(t_mid)).
// Since U exp(-i H_H h / hbar) = exp(-i H h / hbar) U, this splits the Schrodinger
// and gauge factors exactly; it is exact whenever G is constant.
struct HeisenbergStepper {
  const HeisenbergSystem& sys;
  Mat hh;

  Mat step(double t, double h) {
    Mat g = sys.gauge_part(t + 0.5 * h);
    Mat v = exp_skew(Mat(-I_UNIT / sys.hbar * hh), h) * exp_skew(g, h);
    Mat w = exp_skew(g, -h);
    hh = hermitian_part(Mat(w * hh * w.adjoint()));
    return v;
  }
};

}  // namespace

Trajectory<Operator> evolve_observable(const Operator& A0, const HeisenbergSystem& sys, const TimeGrid& grid) {
  grid.validate();
  if (A0.dim() != sys.dim()) throw std::invalid_argument("evolve_observable: dimension mismatch");
  const bool herm = is_hermitian(A0.mat());
  Trajectory<Operator> out;
  out.times = grid.times();
  out.values.reserve(grid.steps + 1);
  out.values.push_back(A0);
  HeisenbergStepper st{sys, sys.H_H.mat()};
  Mat a = A0.mat();
  for (int k = 0; k < grid.steps; ++k) {
    Mat v = st.step(grid.time(k), grid.dt());
    a = v.adjoint() * a * v;
    if (herm) a = hermitian_part(a);
    out.values.emplace_back(a, herm ? Character::hermitian : Character::general);
  }
  return out;
}

Trajectory<Operator> propagator_from_heisenberg(const HeisenbergSystem& sys, const Operator& U0,
                                                const TimeGrid& grid) {
  grid.validate();
  if (!is_unitary(U0.mat())) throw std::invalid_argument("propagator_from_heisenberg: U0 is not unitary");
  Trajectory<Operator> out;
  out.times = grid.times();
  out.values.reserve(grid.steps + 1);
  out.values.push_back(Operator::unitary(U0.mat()));
  HeisenbergStepper st{sys, sys.H_H.mat()};
  Mat u = U0.mat();
  for (int k = 0; k < grid.steps; ++k) {
    u = u * st.step(grid.time(k), grid.dt());
    out.values.push_back(Operator::unitary(u));
  }
  return out;
}

Operator fs_heisenberg_residual(const Operator& xiH, const Operator& xiHdot, const DensityMatrix& rho0) {
  if (xiH.dim() != rho0.dim() || xiHdot.dim() != rho0.dim()) {
    throw std::invalid_argument("fs_heisenberg_residual: dimension mismatch");
  }
  const Mat& x = xiH.mat();
  const Mat& xd = xiHdot.mat();
  const Mat& r = rho0.mat();
  Mat lhs = anticommutator(xd, r) - 2.0 * inner(r, xd) * r + commutator(Mat(x * x - 2.0 * inner(r, x) * x), r);
  return Operator(lhs);
}

std::array<Mat, 3> spin_half(double hbar) {
  return {0.5 * hbar * pauli_x(), 0.5 * hbar * pauli_y(), 0.5 * hbar * pauli_z()};
}

DiracSystem::DiracSystem(Operator h0, Operator h1, DensityMatrix rho, DensityMatrix rbar, KappaFn k, double hb)
    : H0I(Operator::hermitian(h0.mat())),
      H1I(Operator::hermitian(h1.mat())),
      rhoI(std::move(rho)),
      rho_bar0(std::move(rbar)),
      kappa(std::move(k)),
      hbar(hb) {
  const int n = H0I.dim();
  if (H1I.dim() != n || rhoI.dim() != n || rho_bar0.dim() != n) {
    throw std::invalid_argument("DiracSystem: dimension mismatch");
  }
  if (!rhoI.is_pure()) {
    throw std::runtime_error("DiracSystem: rho_I lost purity (defect " + std::to_string(rhoI.pure_defect()) + ")");
  }
  if (!rho_bar0.is_pure()) throw std::invalid_argument("DiracSystem: rho_bar0 must be pure");
}

Mat DiracSystem::gauge_part(double t) const { return gauge_term(rho_bar0.mat(), kappa_matrix(kappa, t, dim())); }

double DiracSystem::total_energy() const { return pairing(rhoI.mat(), Mat(H0I.mat() + H1I.mat())); }
double DiracSystem::free_energy() const { return pairing(rho_bar0.mat(), H0I.mat()); }

Operator dirac_free_generator(const DiracSystem& sys, double t) {
  return Operator::skew(Mat(-I_UNIT / sys.hbar * sys.H0I.mat() + sys.gauge_part(t)));
}

DiracRun dirac_flow_full(const DiracSystem& sys, const TimeGrid& grid) {
  grid.validate();
  const int n = sys.dim();
  const double h = grid.dt();
  const double hb = sys.hbar;
  DiracRun run;
  run.states.times = grid.times();
  run.U0.times = run.states.times;
  run.states.values.reserve(grid.steps + 1);
  run.states.values.push_back(sys);
  run.U0.values.push_back(Operator::identity(n));
  Mat h0 = sys.H0I.mat(), h1 = sys.H1I.mat(), rho = sys.rhoI.mat();
  Mat u0 = Mat::Identity(n, n);
  for (int k = 0; k < grid.steps; ++k) {
    Mat g = sys.gauge_part(grid.time(k) + 0.5 * h);
    // Free factor V = exp(-i H0I h / hbar) exp(h G) advances U0 (right-sided, xi_0 = U0^-1 dU0/dt).
    Mat v = exp_skew(Mat(-I_UNIT / hb * h0), h) * exp_skew(g, h);
    // The state moves under the full Hamiltonian, then is pulled back by V.
    Mat e = exp_skew(Mat(-I_UNIT / hb * (h0 + h1)), h);
    rho = hermitian_part(Mat(v.adjoint() * e * rho * e.adjoint() * v));
    h0 = hermitian_part(Mat(v.adjoint() * h0 * v));
    h1 = hermitian_part(Mat(v.adjoint() * h1 * v));
    u0 = u0 * v;
    run.states.values.emplace_back(Operator(h0, Character::hermitian), Operator(h1, Character::hermitian),
                                   DensityMatrix(rho), sys.rho_bar0, sys.kappa, hb);
    run.U0.values.push_back(Operator::unitary(u0));
  }
  return run;
}

Trajectory<DiracSystem> dirac_flow(const DiracSystem& sys, const TimeGrid& grid) {
  return dirac_flow_full(sys, grid).states;
}

}  // namespace qgeom
