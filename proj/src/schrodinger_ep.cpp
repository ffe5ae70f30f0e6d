#include "qgeom/schrodinger_ep.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qgeom {

HamiltonianFn constant_hamiltonian(const Operator& H) {
  Operator h = Operator::hermitian(H.mat());
  return [h](double) { return h; };
}

GaugeChoice GaugeChoice::constant(const Operator& k) {
  Operator kk = Operator::skew(k.mat());
  return GaugeChoice{[kk](double) { return kk; }};
}

GaugeChoice GaugeChoice::piecewise(std::vector<double> breakpoints, std::vector<Operator> values) {
  if (breakpoints.empty() || breakpoints.size() != values.size()) {
    throw std::invalid_argument("GaugeChoice::piecewise: need one value per breakpoint");
  }
  if (!std::is_sorted(breakpoints.begin(), breakpoints.end())) {
    throw std::invalid_argument("GaugeChoice::piecewise: breakpoints must be increasing");
  }
  for (auto& v : values) v = Operator::skew(v.mat());
  return GaugeChoice{[bp = std::move(breakpoints), vals = std::move(values)](double t) {
    auto it = std::upper_bound(bp.begin(), bp.end(), t);
    std::size_t idx = it == bp.begin() ? 0 : static_cast<std::size_t>(it - bp.begin()) - 1;
    return vals[idx];
  }};
}

Mat GaugeChoice::at(double t, int n) const {
  if (!kappa) return Mat::Zero(n, n);
  Operator k = kappa(t);
  if (k.dim() != n) throw std::invalid_argument("GaugeChoice: kappa dimension mismatch");
  if (k.character() != Character::skew_hermitian && !is_skew_hermitian(k.mat())) {
    throw std::invalid_argument("GaugeChoice: kappa is not skew-Hermitian");
  }
  return k.mat();
}

double GaugeChoice::alpha(const DensityMatrix& rho, double t, double hbar) const {
  return 2.0 * hbar * pairing(Mat(I_UNIT * rho.mat()), at(t, rho.dim()));
}

Mat gauge_term(const Mat& rho, const Mat& kappa) {
  Mat a = Mat::Identity(rho.rows(), rho.cols()) - 2.0 * rho;
  return anticommutator(a, kappa);
}

Operator gauge_generator(const Operator& H, const DensityMatrix& rho, const Operator& kappa, double hbar) {
  if (H.dim() != rho.dim() || kappa.dim() != rho.dim()) {
    throw std::invalid_argument("gauge_generator: dimension mismatch");
  }
  if (!is_hermitian(H.mat())) throw std::invalid_argument("gauge_generator: H is not Hermitian");
  if (!is_skew_hermitian(kappa.mat())) throw std::invalid_argument("gauge_generator: kappa is not skew-Hermitian");
  Mat xi = -I_UNIT / hbar * H.mat() + gauge_term(rho.mat(), kappa.mat());
  double res = commutator(Mat(I_UNIT * hbar * xi - H.mat()), rho.mat()).norm();
  double scale = std::max(1.0, hbar * kappa.mat().norm());
  if (res > 1e-10 * scale) {
    throw std::runtime_error("gauge_generator: residual [i hbar xi - H, rho] = " + std::to_string(res) +
                             " exceeds tolerance; is rho pure?");
  }
  return Operator::skew(skew_part(xi));
}

SchrodingerRun solve_schrodinger_full(const HamiltonianFn& H, const StateVector& psi0,
                                      const GaugeChoice& gauge, const TimeGrid& grid, double hbar) {
  grid.validate();
  if (!psi0.normalized()) throw std::invalid_argument("solve_schrodinger: psi0 must have unit norm");
  const int n = psi0.dim();
  const double h = grid.dt();
  SchrodingerRun run;
  run.states.times = grid.times();
  run.propagator.times = run.states.times;
  run.states.values.reserve(grid.steps + 1);
  run.propagator.values.reserve(grid.steps + 1);
  Mat u = Mat::Identity(n, n);
  Vec psi = psi0.vec();
  run.states.values.push_back(psi0);
  run.propagator.values.push_back(Operator::unitary(u));
  for (int k = 0; k < grid.steps; ++k) {
    const double tm = grid.time(k) + 0.5 * h;
    Operator hm = H(tm);
    if (hm.dim() != n) throw std::invalid_argument("solve_schrodinger: H dimension mismatch");
    if (!is_hermitian(hm.mat())) throw std::invalid_argument("solve_schrodinger: H is not Hermitian");
    Mat step = exp_skew(Mat(-I_UNIT / hbar * hm.mat()), h);
    if (!gauge.is_zero()) {
      // Strang splitting: the gauge factor is a pure phase on the current state.
      Mat kap = gauge.at(tm, n);
      Mat pre = exp_skew(gauge_term(projector(psi), kap), 0.5 * h);
      Vec mid = step * pre * psi;
      Mat post = exp_skew(gauge_term(projector(mid), kap), 0.5 * h);
      step = post * step * pre;
    }
    u = step * u;
    psi = u * psi0.vec();
    run.states.values.emplace_back(psi);
    run.propagator.values.push_back(Operator::unitary(u));
  }
  return run;
}

Trajectory<StateVector> solve_schrodinger(const HamiltonianFn& H, const StateVector& psi0,
                                          const GaugeChoice& gauge, const TimeGrid& grid, double hbar) {
  return solve_schrodinger_full(H, psi0, gauge, grid, hbar).states;
}

Vec projective_residual(const StateVector& psi, const Vec& psidot, const Operator& H, double hbar) {
  if (psidot.size() != psi.dim() || H.dim() != psi.dim()) {
    throw std::invalid_argument("projective_residual: dimension mismatch");
  }
  const Vec& p = psi.vec();
  Vec r = I_UNIT * hbar * psidot - H.mat() * p;
  return r - p * (p.adjoint() * r)(0);
}

Trajectory<DensityMatrix> solve_von_neumann(const HamiltonianFn& H, const DensityMatrix& rho0,
                                            const TimeGrid& grid, double hbar) {
  auto gen = [&](double t) {
    Operator h = H(t);
    if (!is_hermitian(h.mat())) throw std::invalid_argument("solve_von_neumann: H is not Hermitian");
    return Operator::skew(Mat(-I_UNIT / hbar * h.mat()));
  };
  Trajectory<Operator> x = integrate_adjoint(gen, Operator::hermitian(rho0.mat()), grid, +1);
  Trajectory<DensityMatrix> out;
  out.times = std::move(x.times);
  out.values.reserve(x.values.size());
  for (const auto& v : x.values) out.values.emplace_back(v.mat());
  return out;
}

static Mat rho_polynomial(const Mat& rho, const std::vector<double>& coeffs) {
  Mat acc = Mat::Zero(rho.rows(), rho.cols());
  Mat pw = rho;
  for (double c : coeffs) {
    acc += c * pw;
    pw = pw * rho;
  }
  return acc;
}

Operator mixed_generator(const Operator& H, const DensityMatrix& rho, const std::vector<double>& coeffs,
                         double hbar) {
  if (H.dim() != rho.dim()) throw std::invalid_argument("mixed_generator: dimension mismatch");
  Mat xi = -I_UNIT / hbar * (H.mat() + rho_polynomial(rho.mat(), coeffs));
  double res = commutator(Mat(I_UNIT * hbar * xi - H.mat()), rho.mat()).norm();
  if (res > 1e-10 * (1.0 + xi.norm())) {
    throw std::runtime_error("mixed_generator: residual " + std::to_string(res) + " exceeds tolerance");
  }
  return Operator::skew(skew_part(xi));
}

Trajectory<DensityMatrix> solve_von_neumann_gauged(const HamiltonianFn& H, const DensityMatrix& rho0,
                                                   const std::vector<double>& coeffs, const TimeGrid& grid,
                                                   double hbar) {
  grid.validate();
  const double h = grid.dt();
  Trajectory<DensityMatrix> out;
  out.times = grid.times();
  out.values.push_back(rho0);
  Mat rho = rho0.mat();
  for (int k = 0; k < grid.steps; ++k) {
    const double tm = grid.time(k) + 0.5 * h;
    Operator hm = H(tm);
    auto extra = [&](const Mat& r) { return Mat(-I_UNIT / hbar * rho_polynomial(r, coeffs)); };
    rho = adjoint_step(extra(rho), rho, 0.5 * h, +1);
    rho = adjoint_step(Mat(-I_UNIT / hbar * hm.mat()), rho, h, +1);
    rho = adjoint_step(extra(rho), rho, 0.5 * h, +1);
    rho = hermitian_part(rho);
    out.values.emplace_back(rho);
  }
  return out;
}

}  // namespace qgeom
