#include "qgeom/momentum_maps.hpp"

#include <stdexcept>

namespace qgeom {

CotangentPoint::CotangentPoint(Operator u, Operator m)
    : U(Operator::unitary(u.mat())), mu(Operator::skew(m.mat())) {
  if (U.dim() != mu.dim()) throw std::invalid_argument("CotangentPoint: dimension mismatch");
}

Operator momentum_map_pure(const StateVector& psi, double hbar) {
  const Vec& p = psi.vec();
  return Operator::skew(Mat(-I_UNIT * hbar * p * p.adjoint()));
}

Operator coadjoint(const Operator& U, const Operator& mu) {
  if (U.dim() != mu.dim()) throw std::invalid_argument("coadjoint: dimension mismatch");
  if (!is_unitary(U.mat())) throw std::invalid_argument("coadjoint: U is not unitary");
  return Operator(Mat(U.mat().adjoint() * mu.mat() * U.mat()), mu.character());
}

Mat isotropy_projection(const Mat& mu, const Mat& rho0) {
  Mat q = Mat::Identity(rho0.rows(), rho0.cols()) - rho0;
  return q * mu * q;
}

Operator j1(const CotangentPoint& p, const DensityMatrix& rho0) {
  if (!rho0.is_pure()) throw std::invalid_argument("j1: rho0 must be pure");
  if (rho0.dim() != p.U.dim()) throw std::invalid_argument("j1: dimension mismatch");
  const Mat a = coadjoint(p.U, p.mu).mat();
  const Mat& r = rho0.mat();
  Mat one = Mat::Identity(r.rows(), r.cols());
  Mat j = 0.5 * anticommutator(Mat(one - 2.0 * r), a) + inner(r, a) * r;
  return Operator::skew(skew_part(j));
}

double j2(const CotangentPoint& p, const DensityMatrix& rho0) {
  if (!rho0.is_pure()) throw std::invalid_argument("j2: rho0 must be pure");
  if (rho0.dim() != p.U.dim()) throw std::invalid_argument("j2: dimension mismatch");
  const Mat a = coadjoint(p.U, p.mu).mat();
  return (I_UNIT * inner(rho0.mat(), a)).real();
}

Operator legendre_ep(const Vec& g, const StateVector& psi) {
  if (g.size() != psi.dim()) throw std::invalid_argument("legendre_ep: dimension mismatch");
  const Vec& p = psi.vec();
  Mat m = 0.5 * (g * p.adjoint() - p * g.adjoint());
  return Operator::skew(m);
}

Vec df_fiber_derivative(const StateVector& psi, double hbar) { return -I_UNIT * hbar * psi.vec(); }

Vec fs_fiber_derivative(const StateVector& psi, const Vec& psidot, double hbar) {
  const Vec& p = psi.vec();
  const double n2 = p.squaredNorm();
  const cplx pv = p.dot(psidot);
  return hbar * (n2 * psidot - pv * p) / (n2 * n2);
}

double diagonal_phase_momentum(const Operator& mu, double omega) {
  return omega + (I_UNIT * mu.mat().trace()).real();
}

Operator mechanical_connection(const Operator& U, const Mat& Udot, const DensityMatrix& rho0, Bundle bundle) {
  if (U.dim() != Udot.rows() || U.dim() != rho0.dim()) {
    throw std::invalid_argument("mechanical_connection: dimension mismatch");
  }
  const Mat& u = U.mat();
  Mat xi = Udot * u.adjoint();
  if (skew_defect(xi) > 1e-10) throw std::invalid_argument("mechanical_connection: Udot U^-1 is not skew-Hermitian");
  Mat body = u.adjoint() * xi * u;  // Ad_{U^-1} xi
  Mat a = isotropy_projection(body, rho0.mat());
  if (bundle == Bundle::projective) a += I_UNIT * inner(body, rho0.mat()) * rho0.mat();
  return Operator(a);
}

DensityMatrix reference_state(int n) { return project_pure(StateVector::basis(n, n - 1)); }

Mat embed_isotropy(const Mat& block, cplx corner) {
  const Eigen::Index m = block.rows();
  Mat out = Mat::Zero(m + 1, m + 1);
  out.topLeftCorner(m, m) = block;
  out(m, m) = corner;
  return out;
}

}  // namespace qgeom
