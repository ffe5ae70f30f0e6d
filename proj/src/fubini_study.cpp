#include "qgeom/fubini_study.hpp"

#include <cmath>
#include <stdexcept>

namespace qgeom {

GeodesicState::GeodesicState(StateVector p, Vec v) : psi(std::move(p)), psidot(std::move(v)) {
  if (psidot.size() != psi.dim()) throw std::invalid_argument("GeodesicState: dimension mismatch");
  if (psi.norm() <= 1e-12) throw std::invalid_argument("GeodesicState: psi must be nonzero");
  if (!psidot.allFinite()) throw std::invalid_argument("GeodesicState: non-finite velocity");
}

double fs_lagrangian(const GeodesicState& s, double hbar) {
  const Vec& p = s.psi.vec();
  const Vec& v = s.psidot;
  const double n2 = p.squaredNorm();
  if (std::sqrt(n2) <= 1e-12) throw std::invalid_argument("fs_lagrangian: zero psi");
  const cplx vp = v.dot(p);  // <psidot|psi>
  const double num = n2 * v.squaredNorm() - std::norm(vp);
  return 0.5 * hbar * std::max(num, 0.0) / (n2 * n2);
}

double fs_reduced_lagrangian(const Mat& xi, const Mat& rho) {
  const Mat xi2 = xi * xi;
  const double a = pairing(rho, xi2);
  const double b = pairing(rho, Mat(I_UNIT * xi));
  return -0.5 * (a + b * b);
}

double fs_reduced_lagrangian(const Operator& xi, const DensityMatrix& rho) {
  if (xi.dim() != rho.dim()) throw std::invalid_argument("fs_reduced_lagrangian: dimension mismatch");
  if (!is_skew_hermitian(xi.mat())) throw std::invalid_argument("fs_reduced_lagrangian: xi is not skew-Hermitian");
  return fs_reduced_lagrangian(xi.mat(), rho.mat());
}

Mat fs_dl_drho(const Mat& xi, const Mat& rho) {
  return -0.5 * xi * xi + inner(rho, xi) * xi;
}

Mat fs_dl_dxi(const Mat& xi, const Mat& rho) {
  return 0.5 * anticommutator(rho, xi) - inner(rho, xi) * rho;
}

Operator fs_conserved(const GeodesicState& s) {
  const Vec& p = s.psi.vec();
  const Vec& v = s.psidot;
  const cplx pv = p.dot(v);  // <psi|psidot>
  Mat m = v * p.adjoint() - p * v.adjoint() - 2.0 * pv * p * p.adjoint();
  return Operator(m);
}

cplx fs_connection(const GeodesicState& s) { return s.psi.vec().dot(s.psidot); }

namespace {

struct Phase {
  Vec psi;
  Vec v;
};

Vec acceleration(const Vec& psi, const Vec& v) {
  const cplx pv = psi.dot(v);
  const double c = -v.squaredNorm() - 2.0 * std::real(pv * pv);
  return 2.0 * pv * v + c * psi;
}

}  // namespace

Trajectory<GeodesicState> fs_geodesic(const GeodesicState& s0, const TimeGrid& grid) {
  grid.validate();
  if (std::abs(s0.psi.norm() - 1.0) > 1e-10) throw std::invalid_argument("fs_geodesic: psi0 must have unit norm");
  const double h = grid.dt();
  Trajectory<GeodesicState> out;
  out.times = grid.times();
  out.values.reserve(grid.steps + 1);
  out.values.push_back(s0);
  if (std::abs(fs_connection(s0)) > 1e-12) {
    out.warnings.push_back("non-horizontal initial velocity: <psi0|psidot0> != 0");
  }
  Phase y{s0.psi.vec(), s0.psidot};
  for (int k = 0; k < grid.steps; ++k) {
    // Implicit midpoint, solved by fixed-point iteration from an explicit predictor.
    Phase next{y.psi + h * y.v, y.v + h * acceleration(y.psi, y.v)};
    for (int it = 0; it < 100; ++it) {
      Vec mp = 0.5 * (y.psi + next.psi);
      Vec mv = 0.5 * (y.v + next.v);
      Phase cand{y.psi + h * mv, y.v + h * acceleration(mp, mv)};
      double delta = (cand.psi - next.psi).norm() + (cand.v - next.v).norm();
      next = std::move(cand);
      if (delta <= 1e-15 * (1.0 + next.v.norm())) break;
    }
    // Drift correction back onto the sphere and its tangent space.
    next.psi /= next.psi.norm();
    next.v -= std::real(next.psi.dot(next.v)) * next.psi;
    y = std::move(next);
    out.values.emplace_back(StateVector(y.psi), y.v);
  }
  return out;
}

}  // namespace qgeom
