// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "qgeom/fubini_study.hpp"
#include "qgeom/heisenberg_dirac.hpp"
#include "qgeom/hybrid_cq.hpp"
#include "qgeom/integrators.hpp"
#include "qgeom/momentum_maps.hpp"
#include "qgeom/schrodinger_ep.hpp"
#include "qgeom/wigner_moyal.hpp"
#include "random_ops.hpp"

using namespace qgeom;
using qgeom::testing::random_density;
using qgeom::testing::random_hermitian;
using qgeom::testing::random_matrix;
using qgeom::testing::random_skew;
using qgeom::testing::random_state;
using qgeom::testing::taylor_exp;
namespace fs = std::filesystem;

namespace {

struct Check {
  std::string what;
  double value;
  double tol;
  bool ok() const { return std::isfinite(value) && value <= tol; }
};

struct Outcome {
  std::vector<Check> checks;
  void add(std::string what, double value, double tol) { checks.push_back({std::move(what), value, tol}); }
  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.ok(); });
  }
};

std::string format_check(const Check& c) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%s=%.3g%s%.0e", c.what.c_str(), c.value, c.ok() ? "<=" : ">", c.tol);
  return buf;
}

KappaFn kappa_schedule(std::mt19937_64& rng, int n, double t1) {
  std::vector<Mat> pieces{random_skew(n, rng), random_skew(n, rng), random_skew(n, rng)};
  return [pieces, t1](double t) {
    const int k = std::clamp(static_cast<int>(3.0 * t / t1), 0, 2);
    return Operator::skew(pieces[k]);
  };
}

GaugeChoice gauge_schedule(std::mt19937_64& rng, int n, double t1) {
  std::vector<double> bp;
  std::vector<Operator> vals;
  for (int k = 0; k < 3; ++k) {
    bp.push_back(t1 * k / 3.0);
    vals.push_back(Operator::skew(random_skew(n, rng)));
  }
  return GaugeChoice::piecewise(bp, vals);
}

RVec sorted_spectrum(const Mat& a) {
  RVec e = hermitian_spectrum(a);
  std::sort(e.data(), e.data() + e.size());
  return e;
}

// A unitary whose last column is psi.
Mat unitary_to(const Vec& psi, std::mt19937_64& rng) {
  const int n = static_cast<int>(psi.size());
  Mat a = random_matrix(n, rng);
  a.col(0) = psi;
  Eigen::HouseholderQR<Mat> qr(a);
  Mat q = qr.householderQ();
  q.col(0) *= psi.dot(q.col(0)) / std::abs(psi.dot(q.col(0)));
  Mat out(n, n);
  out.leftCols(n - 1) = q.rightCols(n - 1);
  out.col(n - 1) = q.col(0);
  return out;
}

Vec random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v;
}

RVec random_rvec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  RVec v(n);
  for (int i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

HeisenbergElement random_element(std::mt19937_64& rng, double scale = 1.0) {
  RVec h = random_rvec(2, rng, scale);
  if (h.norm() > scale) h *= scale / h.norm();
  return {h, random_rvec(1, rng)(0)};
}

Mat low_unitary(int dim, int levels, std::mt19937_64& rng) {
  Mat u = identity(dim);
  u.topLeftCorner(levels, levels) = taylor_exp(random_skew(levels, rng));
  return u;
}

double low_defect(const Mat& a, const Mat& b, const Mat& proj) { return ((a - b) * proj).norm(); }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + QGEOM_CLI + "\" " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome unitary_integrity() {
  Outcome o;
  std::mt19937_64 rng(1001);
  const int n = 8;
  Mat a = random_skew(n, rng), b = random_skew(n, rng), c = random_skew(n, rng);
  auto gen = [&](double t) { return Operator::skew(Mat(a + std::sin(t) * b + std::cos(2.0 * t) * c)); };
  double worst = 0.0;
  for (Side side : {Side::left, Side::right}) {
    auto traj = integrate_propagator(gen, side, Operator::identity(n), {0.0, 10.0, 10000});
    for (const auto& u : traj.values)
      worst = std::max(worst, (u.mat().adjoint() * u.mat() - identity(n)).norm());
  }
  o.add("unitarity", worst, 1e-10);
  return o;
}

Outcome gauge_invariance() {
  Outcome o;
  std::mt19937_64 rng(1002);
  const int n = 4;
  Mat a = random_hermitian(n, rng), b = random_hermitian(n, rng);
  auto H = [&](double t) { return Operator::hermitian(Mat(a + std::sin(t) * b)); };
  StateVector psi0(random_state(n, rng));
  TimeGrid grid{0.0, 2.0, 400};
  auto ref = solve_schrodinger(H, psi0, GaugeChoice::zero(), grid);
  double proj = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    auto run = solve_schrodinger(H, psi0, gauge_schedule(rng, n, 2.0), grid);
    for (std::size_t k = 0; k < ref.size(); ++k)
      proj = std::max(proj, (projector(run.values[k].vec()) - projector(ref.values[k].vec())).norm());
  }
  o.add("projector", proj, 1e-8);

  Mat hm = random_hermitian(n, rng), obs = random_hermitian(n, rng);
  auto sref = solve_schrodinger(constant_hamiltonian(Operator::hermitian(hm)), psi0, GaugeChoice::zero(), grid);
  DensityMatrix rho0 = project_pure(psi0);
  double expect = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    auto sys = HeisenbergSystem::pure(Operator::hermitian(hm), rho0, kappa_schedule(rng, n, 2.0));
    auto ah = evolve_observable(Operator::hermitian(obs), sys, grid);
    for (std::size_t k = 0; k < sref.size(); ++k) {
      const Vec& p = sref.values[k].vec();
      expect = std::max(expect, std::abs(pairing(rho0.mat(), ah.values[k].mat()) - p.dot(obs * p).real()));
    }
  }
  o.add("heisenberg_expectation", expect, 1e-7);
  return o;
}

Outcome momentum_maps() {
  Outcome o;
  std::mt19937_64 rng(1003);
  const int n = 4;
  const double hbar = 0.8;
  Operator H = Operator::hermitian(random_hermitian(n, rng));
  DensityMatrix r0 = reference_state(n);
  StateVector psi0(r0.mat().col(n - 1));
  double j1max = 0.0, j2drift = 0.0, j2init = 0.0;
  for (int trial = 0; trial < 2; ++trial) {
    GaugeChoice g = trial == 0 ? GaugeChoice::zero() : GaugeChoice::constant(Operator::skew(random_skew(n, rng)));
    SchrodingerRun run = solve_schrodinger_full(constant_hamiltonian(H), psi0, g, {0.0, 3.0, 300}, hbar);
    const double j20 = j2({run.propagator.values[0], momentum_map_pure(psi0, hbar)}, r0);
    j2init = std::max(j2init, std::abs(j20 - hbar * psi0.vec().squaredNorm()));
    for (std::size_t k = 0; k < run.states.size(); ++k) {
      CotangentPoint p(run.propagator.values[k], momentum_map_pure(run.states.values[k], hbar));
      j1max = std::max(j1max, j1(p, r0).mat().norm());
      j2drift = std::max(j2drift, std::abs(j2(p, r0) - j20));
    }
  }
  o.add("J1", j1max, 1e-10);
  o.add("J2_drift", j2drift, 1e-9);
  o.add("J2_initial", j2init, 4 * std::numeric_limits<double>::epsilon() * hbar);

  DensityMatrix f0 = reference_state(3);
  Vec psi = random_state(3, rng);
  Vec v = random_vector(3, rng);
  v -= psi * psi.dot(v);
  auto traj = fs_geodesic({StateVector(psi), v}, {0.0, 1.0, 200});
  double fsj2 = 0.0;
  for (const auto& s : traj.values) {
    StateVector unit(s.psi.vec() / s.psi.norm());
    Mat u = unitary_to(unit.vec(), rng);
    Operator mu = legendre_ep(fs_fiber_derivative(unit, s.psidot), unit);
    fsj2 = std::max(fsj2, std::abs(j2({Operator::unitary(u), mu}, f0)));
  }
  o.add("FS_J2", fsj2, 1e-9);
  return o;
}

Outcome mixed_state_invariants() {
  Outcome o;
  std::mt19937_64 rng(1004);
  const int n = 6;
  Mat a = random_hermitian(n, rng), b = random_hermitian(n, rng);
  auto H = [&](double t) { return Operator::hermitian(Mat(a + std::cos(t) * b)); };
  TimeGrid grid{0.0, 3.0, 1000};
  DensityMatrix rho0(random_density(n, rng));
  auto run = solve_von_neumann(H, rho0, grid);
  const Mat& r0 = rho0.mat();
  const cplx m1 = r0.trace(), m2 = (r0 * r0).trace(), m3 = (r0 * r0 * r0).trace();
  double drift = 0.0;
  for (const auto& r : run.values) {
    const Mat& m = r.mat();
    Mat m_2 = m * m;
    drift = std::max({drift, std::abs(m.trace() - m1), std::abs(m_2.trace() - m2), std::abs((m_2 * m).trace() - m3)});
  }
  o.add("trace_powers", drift, 1e-9);

  auto pure = solve_von_neumann(H, project_pure(StateVector(random_state(n, rng))), grid);
  double defect = 0.0;
  for (const auto& r : pure.values) defect = std::max(defect, (r.mat() * r.mat() - r.mat()).norm());
  o.add("purity", defect, 1e-9);
  return o;
}

Outcome heisenberg_energy() {
  Outcome o;
  std::mt19937_64 rng(1005);
  const int n = 5;
  Mat h = random_hermitian(n, rng);
  DensityMatrix rho0 = project_pure(StateVector(random_state(n, rng)));
  auto sys = HeisenbergSystem::pure(Operator::hermitian(h), rho0, kappa_schedule(rng, n, 3.0));
  auto traj = evolve_heisenberg(sys, {0.0, 3.0, 1000});
  const double e0 = pairing(rho0.mat(), h);
  const RVec s0 = sorted_spectrum(h);
  double de = 0.0, ds = 0.0;
  for (const auto& x : traj.values) {
    de = std::max(de, std::abs(pairing(rho0.mat(), x.mat()) - e0));
    ds = std::max(ds, (sorted_spectrum(x.mat()) - s0).cwiseAbs().maxCoeff());
  }
  o.add("energy", de, 1e-9);
  o.add("spectrum", ds, 1e-10);
  return o;
}

Outcome dirac_equivalence() {
  Outcome o;
  std::mt19937_64 rng(1006);
  const int n = 4;
  Mat h0 = random_hermitian(n, rng), h1 = 0.3 * random_hermitian(n, rng);
  DensityMatrix rho0 = project_pure(StateVector(random_state(n, rng)));
  TimeGrid grid{0.0, 2.0, 1000};
  auto vn = solve_von_neumann(constant_hamiltonian(Operator::hermitian(Mat(h0 + h1))), rho0, grid);
  DiracSystem sys(Operator::hermitian(h0), Operator::hermitian(h1), rho0, rho0, kappa_schedule(rng, n, 2.0));
  DiracRun run = dirac_flow_full(sys, grid);
  double full = 0.0, e1 = 0.0, e2 = 0.0;
  const double et0 = run.states.front().total_energy(), ef0 = run.states.front().free_energy();
  for (std::size_t k = 0; k < vn.size(); ++k) {
    const Mat& u0 = run.U0.values[k].mat();
    const DiracSystem& s = run.states.values[k];
    full = std::max(full, (u0 * s.rhoI.mat() * u0.adjoint() - vn.values[k].mat()).norm());
    e1 = std::max(e1, std::abs(s.total_energy() - et0));
    e2 = std::max(e2, std::abs(s.free_energy() - ef0));
  }
  o.add("reconstruction", full, 1e-7);
  o.add("total_energy", e1, 1e-8);
  o.add("free_energy", e2, 1e-8);
  return o;
}

Outcome fubini_study() {
  Outcome o;
  const double tq = std::numbers::pi / 4;
  auto gc = fs_geodesic({StateVector::basis(2, 0), StateVector::basis(2, 1).vec()}, {0.0, tq, 400});
  Vec want(2);
  want << std::cos(tq), std::sin(tq);
  o.add("great_circle", (gc.back().psi.vec() - want).norm(), 1e-6);

  std::mt19937_64 rng(1007);
  Vec psi = random_state(4, rng);
  Vec v = random_vector(4, rng);
  v -= psi * psi.dot(v);
  GeodesicState s0(StateVector(psi), v);
  auto traj = fs_geodesic(s0, {0.0, 2.0, 2000});
  const Mat m0 = fs_conserved(s0).mat();
  double drift = 0.0;
  for (const auto& s : traj.values) drift = std::max(drift, (fs_conserved(s).mat() - m0).norm());
  o.add("M_drift", drift, 1e-7);

  double var = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    Mat xi = random_skew(4, rng);
    Vec p = random_state(4, rng);
    Mat e = I_UNIT * xi;
    const double m1 = p.dot(e * p).real(), m2 = p.dot(e * e * p).real();
    var = std::max(var, std::abs(fs_reduced_lagrangian(xi, projector(p)) - 0.5 * (m2 - m1 * m1)));
  }
  o.add("variance", var, 1e-12);
  return o;
}

Outcome wigner_moyal() {
  Outcome o;
  std::mt19937_64 rng(1008);
  PhaseSpaceGrid g32(32, 0.45, 1.0);
  double round = 0.0;
  for (int trial = 0; trial < 3; ++trial) {
    Mat a = random_hermitian(32, rng);
    round = std::max(round, (weyl_inverse(wigner_transform(a, g32)).mat() - a).norm() / a.norm());
  }
  o.add("round_trip", round, 1e-10);

  PhaseSpaceGrid g(64, 0.35, 1.0);
  Mat q = position_operator(g).mat(), p = momentum_operator(g).mat();
  Operator H = Operator::hermitian(hermitian_part(Mat(0.5 * (p * p + q * q))));
  DensityMatrix rho0 = project_pure(grid_coherent_state(g, 1.5, 0.0));
  TimeGrid grid{0.0, 2.0, 400};
  auto wt = evolve_wigner(H, wigner_transform(rho0.mat(), g), grid);
  auto vn = solve_von_neumann(constant_hamiltonian(H), rho0, grid);
  double frames = 0.0, norm = 0.0;
  for (std::size_t k = 0; k < wt.size(); ++k) {
    frames = std::max(frames, (wt.values[k].values - wigner_transform(vn.values[k].mat(), g).values).cwiseAbs().maxCoeff());
    norm = std::max(norm, std::abs(wt.values[k].integral() - 1.0));
  }
  o.add("frames", frames, 1e-8);
  o.add("integral", norm, 1e-8);

  auto inside = [&](int j, int k) { return j >= 2 && k >= 2 && j < g.N - 2 && k < g.N - 2; };
  const double dt = 1e-4;
  auto fine = evolve_wigner(H, wt.values[0], {0.0, 2 * dt, 2});
  RMat wdot = (fine.values[2].values - fine.values[0].values) / (2 * dt);
  RMat mb = moyal_bracket(weyl_symbol(H, g), fine.values[1]).values;
  double resid = 0.0;
  for (int j = 0; j < g.N; ++j)
    for (int k = 0; k < g.N; ++k)
      if (inside(j, k)) resid = std::max(resid, std::abs(wdot(j, k) - mb(j, k)));
  o.add("moyal_residual", resid, 1e-5);

  // Moyal bracket of sampled quadratic symbols against the Poisson bracket, on the central half of the grid.
  using Quad = std::array<double, 3>;  // a x^2 + b x p + c p^2
  auto symbol = [&](const Quad& f) {
    return sample(g, [&](double x, double pp) { return f[0] * x * x + f[1] * x * pp + f[2] * pp * pp; });
  };
  const std::vector<Quad> quads{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5, 0.3, 0.5}};
  auto central = [&](int j, int k) { return j >= g.N / 4 && k >= g.N / 4 && j < 3 * g.N / 4 && k < 3 * g.N / 4; };
  double poisson = 0.0;
  for (const auto& f : quads)
    for (const auto& h : quads) {
      RMat m = moyal_bracket(symbol(f), symbol(h)).values;
      for (int j = 0; j < g.N; ++j)
        for (int k = 0; k < g.N; ++k) {
          if (!central(j, k)) continue;
          const double x = g.x(j), pp = g.p(k);
          const double fx = 2 * f[0] * x + f[1] * pp, fp = f[1] * x + 2 * f[2] * pp;
          const double hx = 2 * h[0] * x + h[1] * pp, hp = h[1] * x + 2 * h[2] * pp;
          poisson = std::max(poisson, std::abs(m(j, k) - (fx * hp - fp * hx)));
        }
    }
  o.add("moyal_poisson_quadratic", poisson, 1e-6);

  // {{x, p}} = 1 from sampled linear symbols.
  RMat xp = moyal_bracket(sample(g, [](double x, double) { return x; }), sample(g, [](double, double pp) { return pp; }))
                .values;
  double unit = 0.0;
  for (int j = 0; j < g.N; ++j)
    for (int k = 0; k < g.N; ++k)
      if (central(j, k)) unit = std::max(unit, std::abs(xp(j, k) - 1.0));
  o.add("moyal_xp", unit, 1e-8);
  return o;
}

Outcome hybrid_dynamics() {
  Outcome o;
  CanonicalOperators ops(24);
  HybridHamiltonian H = harmonic_coupling(ops);
  RVec c(2);
  c << 0.5, 0.2;
  StateVector psi0 = coherent_state(c, ops);
  TimeGrid grid{0.0, 1.0, 1000};
  std::mt19937_64 rng(1009);

  double energy = 0.0, consistency = 0.0;
  for (HybridFlow flow : {HybridFlow::mean_field, HybridFlow::extended}) {
    for (RVec z0 : {expectation_Z(projector(psi0.vec()), ops), RVec(c + random_rvec(2, rng))}) {
      HybridState s0(z0, project_pure(psi0));
      auto traj = integrate_hybrid(s0, H, ops, grid, {flow, HybridScheme::composed_midpoint, 1.0});
      const double e0 = hybrid_energy(s0, H);
      const RVec k0 = s0.z - expectation_Z(s0.rho.mat(), ops);
      for (const auto& s : traj.values) {
        energy = std::max(energy, std::abs(hybrid_energy(s, H) - e0));
        if (flow == HybridFlow::extended)
          consistency = std::max(consistency, (s.z - expectation_Z(s.rho.mat(), ops) - k0).norm());
      }
    }
  }
  o.add("energy", energy, 1e-8);

  Operator H0 = Operator::hermitian(random_hermitian(24, rng));
  StateVector q0(random_state(24, rng));
  HybridState s0(expectation_Z(projector(q0.vec()), ops), project_pure(q0));
  auto ext = integrate_hybrid(s0, uncoupled(H0, 1), ops, {0.0, 2.0, 400},
                              {HybridFlow::extended, HybridScheme::composed_midpoint, 1.0});
  auto ref = solve_von_neumann(constant_hamiltonian(H0), project_pure(q0), {0.0, 2.0, 400});
  double quantum = 0.0;
  for (std::size_t k = 0; k < ext.size(); ++k)
    quantum = std::max(quantum, (ext.values[k].rho.mat() - ref.values[k].mat()).norm());
  o.add("uncoupled_quantum", quantum, 1e-10);

  RVec z0(2);
  z0 << 1.0, -0.3;
  auto ph = integrate_hybrid({z0, project_pure(q0)}, phase_type_oscillator(ops), ops, {0.0, 3.0, 300});
  double classical = 0.0;
  for (std::size_t k = 0; k < ph.size(); ++k) {
    const double t = ph.times[k];
    RVec want(2);
    want << z0(0) * std::cos(t) + z0(1) * std::sin(t), -z0(0) * std::sin(t) + z0(1) * std::cos(t);
    classical = std::max(classical, (ph.values[k].z - want).norm());
  }
  o.add("phase_type", classical, 1e-6);
  o.add("consistency", consistency, 1e-6);
  return o;
}

Outcome group_algebra() {
  Outcome o;
  std::mt19937_64 rng(1010);
  double axioms = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    HeisenbergElement a = random_element(rng, 3.0), b = random_element(rng, 3.0), c = random_element(rng, 3.0);
    HeisenbergElement l = heisenberg_multiply(heisenberg_multiply(a, b), c);
    HeisenbergElement r = heisenberg_multiply(a, heisenberg_multiply(b, c));
    HeisenbergElement e = heisenberg_multiply(a, heisenberg_inverse(a));
    HeisenbergElement ai = heisenberg_multiply(a, HeisenbergElement::identity(1));
    axioms = std::max({axioms, (l.h - r.h).norm(), std::abs(l.phi - r.phi), e.h.norm(), std::abs(e.phi),
                       (ai.h - a.h).norm(), std::abs(ai.phi - a.phi)});
  }
  o.add("group_axioms", axioms, 1e-13);

  CanonicalOperators ops(64);
  const int dim = ops.dim();
  const Mat pl = ops.low_projector();
  double semi = 0.0, coad = 0.0, equiv = 0.0, homo = 0.0, dual = 0.0;
  HeisenbergCovector nu{random_rvec(2, rng), 1.0};
  Mat mu_low = Mat::Zero(dim, dim);
  mu_low.topLeftCorner(4, 4) = random_skew(4, rng);
  Operator mu = Operator::skew(mu_low);
  for (int trial = 0; trial < 3; ++trial) {
    SemidirectElement a{random_element(rng), Operator::unitary(low_unitary(dim, 4, rng))};
    SemidirectElement b{random_element(rng), Operator::unitary(low_unitary(dim, 4, rng))};
    SemidirectElement c{random_element(rng), Operator::unitary(low_unitary(dim, 4, rng))};
    SemidirectElement l = semidirect_multiply(semidirect_multiply(a, b, ops), c, ops);
    SemidirectElement r = semidirect_multiply(a, semidirect_multiply(b, c, ops), ops);
    semi = std::max({semi, (l.first.h - r.first.h).norm(), std::abs(l.first.phi - r.first.phi),
                     low_defect(l.second.mat(), r.second.mat(), pl)});

    auto lhs = semidirect_coadjoint(semidirect_multiply(a, b, ops), nu, mu, ops);
    auto mid = semidirect_coadjoint(a, nu, mu, ops);
    Mat m2 = 0.5 * (mid.second.mat() - mid.second.mat().adjoint());
    auto rhs = semidirect_coadjoint(b, mid.first, Operator::skew(m2), ops);
    coad = std::max({coad, (lhs.first.nu - rhs.first.nu).norm(), std::abs(lhs.first.alpha - nu.alpha),
                     low_defect(lhs.second.mat(), rhs.second.mat(), pl)});

    HeisenbergElement h = random_element(rng);
    Mat u = displacement_operator(h, ops).mat();
    for (int k = 0; k < 2; ++k)
      equiv = std::max(equiv, low_defect(Mat(u * ops.Z[k] * u.adjoint()), Mat(ops.Z[k] - h.h(k) * identity(dim)), pl));

    HeisenbergAlgebraElement x{random_rvec(2, rng), random_rvec(1, rng)(0)};
    HeisenbergAlgebraElement y{random_rvec(2, rng), random_rvec(1, rng)(0)};
    homo = std::max(homo, low_defect(iota(heisenberg_bracket(x, y), ops).mat(),
                                     commutator(iota(x, ops).mat(), iota(y, ops).mat()), pl));
    Operator m = Operator::skew(random_skew(dim, rng));
    const double p1 = heisenberg_pairing(iota_star(m, ops), x), p2 = pairing(m, iota(x, ops));
    dual = std::max(dual, std::abs(p1 - p2) / std::max(1.0, std::abs(p2)));
  }
  o.add("semidirect_assoc", semi, 1e-6);
  o.add("coadjoint_contravariance", coad, 1e-6);
  o.add("equivariance", equiv, 1e-6);
  o.add("iota_homomorphism", homo, 1e-8);
  o.add("iota_duality", dual, 1e-8);
  return o;
}

Outcome cli_determinism() {
  Outcome o;
  const fs::path fixtures = QGEOM_FIXTURES;
  const fs::path base = fs::temp_directory_path() / "qgeom_acceptance";
  fs::remove_all(base);
  double mismatches = 0.0, failures = 0.0;
  for (const char* name : {"spin_precession_gauged", "heisenberg_random_gauge", "wigner_harmonic",
                           "ehrenfest_extended"}) {
    const fs::path a = base / "a" / name, b = base / "b" / name;
    const std::string cfg = (fixtures / (std::string(name) + ".json")).string();
    if (run_cli("--output " + a.string() + " simulate " + cfg) != 0) failures += 1;
    if (run_cli("--output " + b.string() + " simulate " + cfg) != 0) failures += 1;
    std::vector<std::string> files;
    if (fs::exists(a))
      for (const auto& entry : fs::directory_iterator(a)) files.push_back(entry.path().filename().string());
    if (files.empty()) failures += 1;
    for (const auto& f : files)
      if (!fs::exists(b / f) || slurp(a / f) != slurp(b / f)) mismatches += 1;
  }
  o.add("run_failures", failures, 0.0);
  o.add("byte_mismatches", mismatches, 0.0);
  const int code =
      run_cli("--output " + (base / "corrupt").string() + " simulate " + (fixtures / "corrupted_generator.json").string());
  o.add("corrupted_exit_code_minus_2", std::abs(code - 2), 0.0);
  fs::remove_all(base);
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"unitary integrity", unitary_integrity},
      {"gauge invariance", gauge_invariance},
      {"momentum-map laws", momentum_maps},
      {"mixed-state invariants", mixed_state_invariants},
      {"Heisenberg energy law", heisenberg_energy},
      {"Dirac-picture equivalence", dirac_equivalence},
      {"Fubini-Study geodesics", fubini_study},
      {"Wigner-Moyal", wigner_moyal},
      {"hybrid dynamics", hybrid_dynamics},
      {"group and representation algebra", group_algebra},
      {"CLI determinism", cli_determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    std::string error;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      error = e.what();
    }
    const bool ok = error.empty() && o.ok();
    failed += ok ? 0 : 1;
    std::printf("criterion %zu %s: %s", i + 1, criteria[i].first.c_str(), ok ? "PASS" : "FAIL");
    for (const auto& c : o.checks) std::printf(" %s", format_check(c).c_str());
    if (!error.empty()) std::printf(" error: %s", error.c_str());
    std::printf("\n");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
