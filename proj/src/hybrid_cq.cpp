#include "qgeom/hybrid_cq.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace qgeom {

namespace {

void require_finite(const RVec& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

void require_same_n(int a, int b, const char* what) {
  if (a != b) throw std::invalid_argument(std::string(what) + ": mismatched number of degrees of freedom");
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// Per-mode occupation of a product basis index.
bool all_below(int index, int fock, int modes, int levels) {
  for (int k = 0; k < modes; ++k) {
    if (index % fock >= levels) return false;
    index /= fock;
  }
  return true;
}

}  // namespace

HeisenbergElement::HeisenbergElement(RVec h_, double phi_) : h(std::move(h_)), phi(phi_) {
  if (h.size() % 2 != 0) throw std::invalid_argument("HeisenbergElement: h must have even length");
  require_finite(h, "HeisenbergElement");
  if (!std::isfinite(phi)) throw std::invalid_argument("HeisenbergElement: non-finite phase");
}

HeisenbergAlgebraElement::HeisenbergAlgebraElement(RVec z, double p) : zeta(std::move(z)), phi(p) {
  if (zeta.size() % 2 != 0) throw std::invalid_argument("HeisenbergAlgebraElement: zeta must have even length");
  require_finite(zeta, "HeisenbergAlgebraElement");
  if (!std::isfinite(phi)) throw std::invalid_argument("HeisenbergAlgebraElement: non-finite phase");
}

RMat symplectic_J(int n) {
  RMat J = RMat::Zero(2 * n, 2 * n);
  J.topRightCorner(n, n) = RMat::Identity(n, n);
  J.bottomLeftCorner(n, n) = -RMat::Identity(n, n);
  return J;
}

CanonicalOperators::CanonicalOperators(int fock_dim_, int modes, double hbar_)
    : fock_dim(fock_dim_), n(modes), hbar(hbar_), J(symplectic_J(modes)) {
  if (fock_dim < 2) throw std::invalid_argument("CanonicalOperators: fock_dim must be at least 2");
  if (n < 1) throw std::invalid_argument("CanonicalOperators: need at least one mode");
  if (!(hbar > 0.0)) throw std::invalid_argument("CanonicalOperators: hbar must be positive");
  Mat a = Mat::Zero(fock_dim, fock_dim);
  for (int k = 1; k < fock_dim; ++k) a(k - 1, k) = std::sqrt(static_cast<double>(k));
  const double s = std::sqrt(hbar / 2.0);
  Mat q = s * (a + a.adjoint());
  Mat p = I_UNIT * s * (a.adjoint() - a);
  auto embed = [&](const Mat& op, int k) {
    Mat out = Mat::Identity(1, 1);
    for (int m = 0; m < n; ++m) out = kron(out, m == k ? op : Mat(Mat::Identity(fock_dim, fock_dim)));
    return out;
  };
  Z.resize(2 * n);
  for (int k = 0; k < n; ++k) {
    Z[k] = embed(q, k);
    Z[n + k] = embed(p, k);
  }
}

Mat CanonicalOperators::symplectic_combination(const RVec& v) const {
  if (v.size() != 2 * n) throw std::invalid_argument("symplectic_combination: wrong vector length");
  RVec w = J.transpose() * v;  // v . J Z = sum_j (J^T v)_j Z_j
  Mat out = Mat::Zero(dim(), dim());
  for (int j = 0; j < 2 * n; ++j) out += w(j) * Z[j];
  return out;
}

Mat CanonicalOperators::low_projector(int levels) const {
  if (levels < 0) levels = fock_dim / 4;
  Mat p = Mat::Zero(dim(), dim());
  for (int i = 0; i < dim(); ++i)
    if (all_below(i, fock_dim, n, levels)) p(i, i) = 1.0;
  return p;
}

Vec CanonicalOperators::vacuum() const {
  Vec v = Vec::Zero(dim());
  v(0) = 1.0;
  return v;
}

double CanonicalOperators::ccr_defect() const {
  Mat low = low_projector(fock_dim / 2);
  Mat id = Mat::Identity(dim(), dim());
  double worst = 0.0;
  for (int j = 0; j < 2 * n; ++j)
    for (int k = 0; k < 2 * n; ++k) {
      Mat d = (commutator(Z[j], Z[k]) - I_UNIT * hbar * J(j, k) * id) * low;
      worst = std::max(worst, d.norm());
    }
  return worst;
}

HeisenbergElement heisenberg_multiply(const HeisenbergElement& g, const HeisenbergElement& h) {
  require_same_n(g.n(), h.n(), "heisenberg_multiply");
  RMat J = symplectic_J(g.n());
  return {g.h + h.h, g.phi + h.phi + 0.5 * g.h.dot(J * h.h)};
}

HeisenbergElement heisenberg_inverse(const HeisenbergElement& g) { return {-g.h, -g.phi}; }

HeisenbergAlgebraElement heisenberg_ad(const HeisenbergAlgebraElement& a, const HeisenbergAlgebraElement& b) {
  require_same_n(a.n(), b.n(), "heisenberg_ad");
  RMat J = symplectic_J(a.n());
  return {RVec::Zero(a.zeta.size()), -a.zeta.dot(J * b.zeta)};
}

HeisenbergAlgebraElement heisenberg_bracket(const HeisenbergAlgebraElement& a, const HeisenbergAlgebraElement& b) {
  HeisenbergAlgebraElement c = heisenberg_ad(a, b);
  c.phi = -c.phi;
  return c;
}

HeisenbergAlgebraElement heisenberg_Ad(const HeisenbergElement& g, const HeisenbergAlgebraElement& a) {
  require_same_n(g.n(), a.n(), "heisenberg_Ad");
  RMat J = symplectic_J(g.n());
  return {a.zeta, a.phi + g.h.dot(J * a.zeta)};
}

HeisenbergCovector heisenberg_coadjoint(const HeisenbergElement& g, const HeisenbergCovector& nu) {
  if (nu.nu.size() != g.h.size()) throw std::invalid_argument("heisenberg_coadjoint: size mismatch");
  RMat J = symplectic_J(g.n());
  return {nu.nu - nu.alpha * (J * g.h), nu.alpha};
}

double heisenberg_pairing(const HeisenbergCovector& nu, const HeisenbergAlgebraElement& a) {
  if (nu.nu.size() != a.zeta.size()) throw std::invalid_argument("heisenberg_pairing: size mismatch");
  return nu.nu.dot(a.zeta) + nu.alpha * a.phi;
}

Operator displacement_operator(const HeisenbergElement& h, const CanonicalOperators& ops) {
  require_same_n(h.n(), ops.n, "displacement_operator");
  if (ops.fock_dim < 8) throw std::invalid_argument("displacement_operator: fock_dim must be at least 8");
  Mat gen = -I_UNIT / ops.hbar * ops.symplectic_combination(h.h);
  Mat u = std::polar(1.0, -h.phi / ops.hbar) * exp_skew(gen, 1.0);
  if (unitary_defect(u) > 1e-10) {
    throw std::runtime_error("displacement_operator: result is not unitary (|h| too large for the truncation)");
  }
  return Operator::unitary(u);
}

Operator iota(const HeisenbergAlgebraElement& a, const CanonicalOperators& ops) {
  require_same_n(a.n(), ops.n, "iota");
  Mat m = -I_UNIT / ops.hbar * (a.phi * Mat::Identity(ops.dim(), ops.dim()) + ops.symplectic_combination(a.zeta));
  return Operator::skew(m);
}

HeisenbergCovector iota_star(const Operator& mu, const CanonicalOperators& ops) {
  if (mu.dim() != ops.dim()) throw std::invalid_argument("iota_star: dimension mismatch");
  if (!is_skew_hermitian(mu.mat())) throw std::invalid_argument("iota_star: mu is not skew-Hermitian");
  HeisenbergCovector out{RVec(2 * ops.n), 0.0};
  for (int k = 0; k < 2 * ops.n; ++k) {
    Mat jz = Mat::Zero(ops.dim(), ops.dim());
    for (int j = 0; j < 2 * ops.n; ++j) jz += ops.J(k, j) * ops.Z[j];
    out.nu(k) = pairing(mu.mat(), Mat(-I_UNIT / ops.hbar * jz));
  }
  out.alpha = (I_UNIT / ops.hbar * mu.mat().trace()).real();
  return out;
}

SemidirectElement semidirect_identity(const CanonicalOperators& ops) {
  return {HeisenbergElement::identity(ops.n), Operator::identity(ops.dim())};
}

SemidirectElement semidirect_multiply(const SemidirectElement& a, const SemidirectElement& b,
                                      const CanonicalOperators& ops) {
  if (a.second.dim() != ops.dim() || b.second.dim() != ops.dim()) {
    throw std::invalid_argument("semidirect_multiply: dimension mismatch");
  }
  const Mat uh = displacement_operator(a.first, ops).mat();
  Mat u = a.second.mat() * uh * b.second.mat() * uh.adjoint();
  return {heisenberg_multiply(a.first, b.first), Operator::unitary(u)};
}

std::pair<HeisenbergCovector, Operator> semidirect_coadjoint(const SemidirectElement& g, const HeisenbergCovector& nu,
                                                             const Operator& mu, const CanonicalOperators& ops) {
  if (mu.dim() != ops.dim() || g.second.dim() != ops.dim()) {
    throw std::invalid_argument("semidirect_coadjoint: dimension mismatch");
  }
  if (!is_skew_hermitian(mu.mat())) throw std::invalid_argument("semidirect_coadjoint: mu is not skew-Hermitian");
  const Mat& u = g.second.mat();
  const Mat uh = displacement_operator(g.first, ops).mat();
  const Mat d = mu.mat() - u.adjoint() * mu.mat() * u;
  HeisenbergCovector out = heisenberg_coadjoint(g.first, nu);
  for (int k = 0; k < 2 * ops.n; ++k) {
    Mat jz = Mat::Zero(ops.dim(), ops.dim());
    for (int j = 0; j < 2 * ops.n; ++j) jz += ops.J(k, j) * ops.Z[j];
    out.nu(k) += pairing(d, Mat(I_UNIT / ops.hbar * jz));
  }
  Mat m = uh.adjoint() * u.adjoint() * mu.mat() * u * uh;
  return {out, Operator::skew(skew_part(m))};
}

StateVector coherent_state(const RVec& z0, const CanonicalOperators& ops) {
  return StateVector(displacement_operator({z0, 0.0}, ops).mat() * ops.vacuum());
}

RVec expectation_Z(const Mat& rho, const CanonicalOperators& ops) {
  if (rho.rows() != ops.dim()) throw std::invalid_argument("expectation_Z: dimension mismatch");
  RVec out(2 * ops.n);
  for (int k = 0; k < 2 * ops.n; ++k) out(k) = (ops.Z[k] * rho).trace().real();
  return out;
}

HybridState::HybridState(RVec z_, DensityMatrix r) : z(std::move(z_)), rho(std::move(r)) {
  if (z.size() % 2 != 0) throw std::invalid_argument("HybridState: z must have even length");
  require_finite(z, "HybridState");
}

HybridState semidirect_action(const SemidirectElement& g, const HybridState& s, const CanonicalOperators& ops) {
  const Mat& u = g.second.mat();
  const Mat uh = displacement_operator(g.first, ops).mat();
  const Mat& r = s.rho.mat();
  RVec z = s.z - g.first.h + expectation_Z(Mat(u.adjoint() * r * u), ops) - expectation_Z(r, ops);
  Mat rho = uh.adjoint() * u.adjoint() * r * u * uh;
  return {z, DensityMatrix(hermitian_part(rho))};
}

HybridState semidirect_evolution(const HybridState& s0, const HeisenbergElement& h, const Operator& U,
                                 const CanonicalOperators& ops) {
  const Mat& u = U.mat();
  const Mat uh = displacement_operator(h, ops).mat();
  const Mat& r = s0.rho.mat();
  RVec z = s0.z + h.h + expectation_Z(Mat(u * r * u.adjoint()), ops) - expectation_Z(r, ops);
  Mat rho = uh * u * r * u.adjoint() * uh.adjoint();
  return {z, DensityMatrix(hermitian_part(rho))};
}

std::vector<Operator> finite_difference_gradient(const HybridHamiltonianFn& H, const RVec& z) {
  const double step = 1e-6 * (1.0 + z.norm());
  std::vector<Operator> out;
  out.reserve(z.size());
  for (Eigen::Index k = 0; k < z.size(); ++k) {
    RVec zp = z, zm = z;
    zp(k) += step;
    zm(k) -= step;
    out.push_back(Operator::hermitian(hermitian_part(Mat((H(zp).mat() - H(zm).mat()) / (2.0 * step)))));
  }
  return out;
}

HybridHamiltonian::HybridHamiltonian(HybridHamiltonianFn H, int n, HybridGradientFn grad)
    : HybridHamiltonian(std::move(H), n, std::move(grad), {RVec::Zero(2 * n)}) {}

HybridHamiltonian::HybridHamiltonian(HybridHamiltonianFn H, int n, HybridGradientFn grad,
                                     const std::vector<RVec>& probes)
    : H_(std::move(H)), grad_(std::move(grad)), n_(n) {
  if (!H_) throw std::invalid_argument("HybridHamiltonian: missing H");
  if (n_ < 1) throw std::invalid_argument("HybridHamiltonian: need n >= 1");
  if (!grad_) return;
  for (const RVec& z : probes) {
    if (z.size() != 2 * n_) throw std::invalid_argument("HybridHamiltonian: probe has wrong length");
    auto a = grad_(z);
    auto f = finite_difference_gradient(H_, z);
    if (a.size() != f.size()) throw std::invalid_argument("HybridHamiltonian: gradient has wrong length");
    for (std::size_t k = 0; k < a.size(); ++k) {
      double err = (a[k].mat() - f[k].mat()).norm();
      if (err > 1e-5 * (1.0 + a[k].mat().norm())) {
        throw std::invalid_argument("HybridHamiltonian: analytic gradient component " + std::to_string(k) +
                                    " disagrees with finite differences (" + std::to_string(err) + ")");
      }
    }
  }
}

Operator HybridHamiltonian::operator()(const RVec& z) const {
  Operator h = H_(z);
  if (!is_hermitian(h.mat())) throw std::invalid_argument("HybridHamiltonian: H(z) is not Hermitian");
  return h;
}

std::vector<Operator> HybridHamiltonian::gradient(const RVec& z) const {
  return grad_ ? grad_(z) : finite_difference_gradient(H_, z);
}

HybridHamiltonian harmonic_coupling(const CanonicalOperators& ops) {
  const int n = ops.n;
  Mat h0 = Mat::Zero(ops.dim(), ops.dim());
  for (int k = 0; k < n; ++k) h0 += 0.5 * (ops.P(k) * ops.P(k) + ops.Q(k) * ops.Q(k));
  std::vector<Mat> q;
  for (int k = 0; k < n; ++k) q.push_back(ops.Q(k));
  auto H = [h0, q, n](const RVec& z) {
    Mat m = h0;
    for (int k = 0; k < n; ++k) m += z(k) * q[k];
    return Operator::hermitian(m);
  };
  auto grad = [q, n, d = ops.dim()](const RVec&) {
    std::vector<Operator> g;
    for (int k = 0; k < n; ++k) g.push_back(Operator::hermitian(q[k]));
    for (int k = 0; k < n; ++k) g.push_back(Operator::hermitian(Mat::Zero(d, d)));
    return g;
  };
  return HybridHamiltonian(H, n, grad);
}

HybridHamiltonian phase_type_oscillator(const CanonicalOperators& ops) {
  const int d = ops.dim();
  auto H = [d](const RVec& z) { return Operator::hermitian(0.5 * z.squaredNorm() * Mat::Identity(d, d)); };
  auto grad = [d](const RVec& z) {
    std::vector<Operator> g;
    for (Eigen::Index k = 0; k < z.size(); ++k) g.push_back(Operator::hermitian(z(k) * Mat::Identity(d, d)));
    return g;
  };
  return HybridHamiltonian(H, ops.n, grad);
}

HybridHamiltonian uncoupled(const Operator& H0, int n) {
  Operator h = Operator::hermitian(H0.mat());
  auto grad = [h, n](const RVec&) {
    return std::vector<Operator>(2 * n, Operator::hermitian(Mat::Zero(h.dim(), h.dim())));
  };
  return HybridHamiltonian([h](const RVec&) { return h; }, n, grad);
}

namespace {

struct RawRhs {
  RVec zdot;
  Mat K;
};

RVec force(const Mat& rho, const std::vector<Operator>& grad) {
  RVec g(grad.size());
  for (std::size_t k = 0; k < grad.size(); ++k) g(k) = pairing(rho, grad[k].mat());
  return g;
}

RawRhs raw_rhs(const RVec& z, const Mat& rho, const HybridHamiltonian& H, const CanonicalOperators* ops,
               HybridFlow flow, double hbar) {
  if (z.size() != 2 * H.n()) throw std::invalid_argument("hybrid rhs: z has wrong length");
  Mat h = H(z).mat();
  if (h.rows() != rho.rows()) throw std::invalid_argument("hybrid rhs: H(z) and rho dimensions differ");
  RVec g = force(rho, H.gradient(z));
  RMat J = symplectic_J(H.n());
  RawRhs out{J * g, h};
  if (flow == HybridFlow::extended) {
    if (!ops || ops->dim() != rho.rows() || ops->n != H.n()) {
      throw std::invalid_argument("ehrenfest_extended_rhs: canonical operators do not match the state");
    }
    Mat c = commutator(h, rho);
    for (int k = 0; k < 2 * H.n(); ++k) {
      out.zdot(k) += (-I_UNIT / hbar * (ops->Z[k] * c).trace()).real();
      out.K += g(k) * ops->Z[k];
    }
  }
  return out;
}

HybridRhs wrap_rhs(const RawRhs& r, const Mat& rho, double hbar) {
  Mat rd = -I_UNIT / hbar * commutator(r.K, rho);
  return {r.zdot, Operator(rd), Operator::hermitian(r.K)};
}

struct Phase {
  RVec z;
  Mat rho;
};

Phase advance(const Phase& base, const Phase& eval, const HybridHamiltonian& H, const CanonicalOperators& ops,
              HybridFlow flow, double hbar, double h) {
  RawRhs r = raw_rhs(eval.z, eval.rho, H, &ops, flow, hbar);
  Mat e = exp_skew(Mat(-I_UNIT / hbar * r.K), h);
  return {base.z + h * r.zdot, hermitian_part(Mat(e * base.rho * e.adjoint()))};
}

// Implicit exponential midpoint: y1 = advance(y0, (y0 + y1) / 2), by fixed-point iteration.
Phase implicit_step(const Phase& y, const HybridHamiltonian& H, const CanonicalOperators& ops, HybridFlow flow,
                    double hbar, double h, bool& converged) {
  Phase next = advance(y, y, H, ops, flow, hbar, h);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 60; ++it) {
    Phase mid{0.5 * (y.z + next.z), 0.5 * (y.rho + next.rho)};
    Phase cand = advance(y, mid, H, ops, flow, hbar, h);
    double delta = (cand.z - next.z).norm() + (cand.rho - next.rho).norm();
    next = std::move(cand);
    const double scale = 1.0 + next.z.norm();
    // Stop at round-off, or once the contraction stalls there.
    if (delta <= 1e-14 * scale || (delta >= prev && delta <= 1e-12 * scale)) return next;
    prev = delta;
  }
  converged = false;
  return next;
}

}  // namespace

RVec classical_force(const HybridState& s, const HybridHamiltonian& H) {
  return force(s.rho.mat(), H.gradient(s.z));
}

double hybrid_energy(const HybridState& s, const HybridHamiltonian& H) { return pairing(s.rho.mat(), H(s.z).mat()); }

HybridRhs mean_field_rhs(const HybridState& s, const HybridHamiltonian& H, double hbar) {
  return wrap_rhs(raw_rhs(s.z, s.rho.mat(), H, nullptr, HybridFlow::mean_field, hbar), s.rho.mat(), hbar);
}

HybridRhs ehrenfest_extended_rhs(const HybridState& s, const HybridHamiltonian& H, const CanonicalOperators& ops,
                                 double hbar) {
  return wrap_rhs(raw_rhs(s.z, s.rho.mat(), H, &ops, HybridFlow::extended, hbar), s.rho.mat(), hbar);
}

Trajectory<HybridState> integrate_hybrid(const HybridState& s0, const HybridHamiltonian& H,
                                         const CanonicalOperators& ops, const TimeGrid& grid,
                                         const HybridOptions& opt) {
  grid.validate();
  if (s0.rho.dim() != ops.dim()) throw std::invalid_argument("integrate_hybrid: rho and operators differ in dimension");
  if (s0.z.size() != 2 * H.n()) throw std::invalid_argument("integrate_hybrid: z has wrong length");
  const double h = grid.dt();
  Trajectory<HybridState> out;
  out.times = grid.times();
  out.values.reserve(grid.steps + 1);
  out.values.push_back(s0);
  Phase y{s0.z, s0.rho.mat()};
  bool converged = true;
  // Triple-jump weights for a fourth-order symmetric composition.
  const double w1 = 1.0 / (2.0 - std::cbrt(2.0));
  const double w0 = 1.0 - 2.0 * w1;
  for (int k = 0; k < grid.steps; ++k) {
    if (opt.scheme == HybridScheme::midpoint_predictor) {
      auto adv = [&](const Phase& base, const Phase& eval, double, double hh) {
        return advance(base, eval, H, ops, opt.flow, opt.hbar, hh);
      };
      y = midpoint_predictor_step(y, grid.time(k), h, adv);
    } else {
      for (double w : {w1, w0, w1}) y = implicit_step(y, H, ops, opt.flow, opt.hbar, w * h, converged);
    }
    out.values.emplace_back(y.z, DensityMatrix(y.rho));
  }
  if (!converged) out.warnings.push_back("implicit midpoint iteration did not reach round-off in some steps");
  return out;
}

void write_hybrid_csv(std::ostream& os, const Trajectory<HybridState>& traj, const HybridHamiltonian& H,
                      const CanonicalOperators& ops) {
  if (traj.values.empty()) throw std::invalid_argument("write_hybrid_csv: empty trajectory");
  const int m = static_cast<int>(traj.front().z.size());
  os << "t";
  for (int k = 0; k < m; ++k) os << ",z" << k;
  os << ",Q,P,energy,purity\r\n";
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const HybridState& s = traj.values[i];
    RVec ez = expectation_Z(s.rho.mat(), ops);
    os << format_double(traj.times[i]);
    for (int k = 0; k < m; ++k) os << ',' << format_double(s.z(k));
    os << ',' << format_double(ez(0)) << ',' << format_double(ez(ops.n)) << ','
       << format_double(hybrid_energy(s, H)) << ',' << format_double(s.rho.purity()) << "\r\n";
  }
}

}  // namespace qgeom
