#include "qgeom/hilbert_core.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace qgeom {

std::string to_string(Character c) {
  switch (c) {
    case Character::general: return "general";
    case Character::hermitian: return "hermitian";
    case Character::skew_hermitian: return "skew_hermitian";
    case Character::unitary: return "unitary";
  }
  return "general";
}

Character character_from_string(const std::string& s) {
  if (s == "general") return Character::general;
  if (s == "hermitian") return Character::hermitian;
  if (s == "skew_hermitian") return Character::skew_hermitian;
  if (s == "unitary") return Character::unitary;
  throw std::invalid_argument("unknown operator character '" + s + "'");
}

double hermitian_defect(const Mat& a) { return (a - a.adjoint()).norm(); }
double skew_defect(const Mat& a) { return (a + a.adjoint()).norm(); }
double unitary_defect(const Mat& a) {
  return (a.adjoint() * a - Mat::Identity(a.rows(), a.cols())).norm();
}

bool is_hermitian(const Mat& a) {
  return hermitian_defect(a) <= tol::hermitian_rel * (1.0 + a.norm());
}
bool is_skew_hermitian(const Mat& a) {
  return skew_defect(a) <= tol::hermitian_rel * (1.0 + a.norm());
}
bool is_unitary(const Mat& a) { return unitary_defect(a) <= tol::unitary; }

static void require_square(const Mat& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw std::invalid_argument(std::string(what) + ": expected a non-empty square matrix");
  }
}

static void require_same_dim(const Mat& a, const Mat& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(what) + ": dimension mismatch (" +
                                std::to_string(a.rows()) + " vs " + std::to_string(b.rows()) + ")");
  }
}

Operator::Operator(Mat entries, Character character) : m_(std::move(entries)), c_(character) {
  require_square(m_, "Operator");
  if (!m_.allFinite()) throw std::invalid_argument("Operator: non-finite entries");
  switch (c_) {
    case Character::hermitian:
      if (!is_hermitian(m_)) {
        throw std::invalid_argument("Operator: not Hermitian (defect " +
                                    std::to_string(hermitian_defect(m_)) + ")");
      }
      break;
    case Character::skew_hermitian:
      if (!is_skew_hermitian(m_)) {
        throw std::invalid_argument("Operator: not skew-Hermitian (defect " +
                                    std::to_string(skew_defect(m_)) + ")");
      }
      break;
    case Character::unitary:
      if (!is_unitary(m_)) {
        throw std::invalid_argument("Operator: not unitary (defect " +
                                    std::to_string(unitary_defect(m_)) + ")");
      }
      break;
    case Character::general: break;
  }
}

Operator Operator::identity(int n, Character c) { return Operator(Mat::Identity(n, n), c); }
Operator Operator::zero(int n, Character c) { return Operator(Mat::Zero(n, n), c); }

Operator Operator::adjoint() const {
  Character c = c_;
  return Operator(m_.adjoint(), c);
}

StateVector::StateVector(Vec amplitudes) : v_(std::move(amplitudes)) {
  if (v_.size() == 0) throw std::invalid_argument("StateVector: empty");
  if (!v_.allFinite()) throw std::invalid_argument("StateVector: non-finite amplitudes");
}

StateVector StateVector::basis(int n, int k) {
  if (k < 0 || k >= n) throw std::invalid_argument("StateVector::basis: index out of range");
  Vec v = Vec::Zero(n);
  v(k) = 1.0;
  return StateVector(v);
}

bool StateVector::normalized() const {
  return std::abs(v_.squaredNorm() - 1.0) <= tol::normalized;
}

StateVector StateVector::normalized_copy() const {
  double n = v_.norm();
  if (n <= 1e-12) throw std::invalid_argument("StateVector: cannot normalize zero vector");
  return StateVector(v_ / n);
}

DensityMatrix::DensityMatrix(Mat entries) {
  require_square(entries, "DensityMatrix");
  if (!entries.allFinite()) throw std::invalid_argument("DensityMatrix: non-finite entries");
  if (!is_hermitian(entries)) {
    throw std::invalid_argument("DensityMatrix: not Hermitian (defect " +
                                std::to_string(hermitian_defect(entries)) + ")");
  }
  m_ = hermitian_part(entries);
  double tr = m_.trace().real();
  if (std::abs(tr - 1.0) > tol::density_trace) {
    throw std::invalid_argument("DensityMatrix: trace " + std::to_string(tr) + " != 1");
  }
  RVec ev = hermitian_spectrum(m_);
  if (ev.minCoeff() < tol::density_eig) {
    throw std::invalid_argument("DensityMatrix: negative eigenvalue " +
                                std::to_string(ev.minCoeff()));
  }
}

DensityMatrix DensityMatrix::diagonal(const RVec& weights) {
  Mat m = Mat::Zero(weights.size(), weights.size());
  for (Eigen::Index i = 0; i < weights.size(); ++i) m(i, i) = weights(i);
  return DensityMatrix(m);
}

double DensityMatrix::purity() const { return (m_ * m_).trace().real(); }
double DensityMatrix::pure_defect() const { return (m_ * m_ - m_).norm(); }
RVec DensityMatrix::eigenvalues() const { return hermitian_spectrum(m_); }

Mat commutator(const Mat& a, const Mat& b) {
  require_same_dim(a, b, "commutator");
  return a * b - b * a;
}

Mat anticommutator(const Mat& a, const Mat& b) {
  require_same_dim(a, b, "anticommutator");
  return a * b + b * a;
}

cplx inner(const Mat& a, const Mat& b) {
  require_same_dim(a, b, "inner");
  return (a.conjugate().cwiseProduct(b)).sum();
}

double pairing(const Mat& a, const Mat& b) { return inner(a, b).real(); }
double pairing(const Operator& a, const Operator& b) { return pairing(a.mat(), b.mat()); }

Operator bracket(const Operator& a, const Operator& b, BracketKind kind) {
  Mat r = kind == BracketKind::commutator ? commutator(a.mat(), b.mat())
                                          : anticommutator(a.mat(), b.mat());
  Character c = Character::general;
  const bool ha = a.character() == Character::hermitian;
  const bool hb = b.character() == Character::hermitian;
  const bool sa = a.character() == Character::skew_hermitian;
  const bool sb = b.character() == Character::skew_hermitian;
  if (kind == BracketKind::commutator) {
    if ((ha && hb) || (sa && sb)) c = Character::skew_hermitian;
    else if ((ha && sb) || (sa && hb)) c = Character::hermitian;
  } else {
    if ((ha && hb) || (sa && sb)) c = Character::hermitian;
    else if ((ha && sb) || (sa && hb)) c = Character::skew_hermitian;
  }
  return Operator(std::move(r), c);
}

Mat projector(const Vec& psi) {
  double n2 = psi.squaredNorm();
  if (std::sqrt(n2) <= 1e-12) throw std::invalid_argument("project_pure: zero vector");
  return psi * psi.adjoint() / n2;
}

DensityMatrix project_pure(const StateVector& psi) { return DensityMatrix(projector(psi.vec())); }

cplx expectation(const DensityMatrix& rho, const Operator& a) {
  return inner(a.mat(), rho.mat());
}

Mat hermitian_part(const Mat& a) { return 0.5 * (a + a.adjoint()); }
Mat skew_part(const Mat& a) { return 0.5 * (a - a.adjoint()); }

RVec hermitian_spectrum(const Mat& a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitian_part(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Mat exp_skew(const Mat& xi, double t) {
  // xi = -iK with K Hermitian, so exp(t xi) = V diag(exp(-i t k)) V^dagger.
  Mat k = hermitian_part(I_UNIT * xi);
  Eigen::SelfAdjointEigenSolver<Mat> es(k);
  const RVec& lam = es.eigenvalues();
  const Mat& v = es.eigenvectors();
  Vec phase(lam.size());
  for (Eigen::Index i = 0; i < lam.size(); ++i) phase(i) = std::exp(-I_UNIT * (t * lam(i)));
  return v * phase.asDiagonal() * v.adjoint();
}

Operator exp_generator(const Operator& xi, double t) {
  if (xi.character() != Character::skew_hermitian && !is_skew_hermitian(xi.mat())) {
    throw std::invalid_argument("exp_generator: generator is not skew-Hermitian");
  }
  return Operator::unitary(exp_skew(xi.mat(), t));
}

static nlohmann::json matrix_parts(const Mat& m, nlohmann::json& im) {
  nlohmann::json re = nlohmann::json::array();
  im = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json rr = nlohmann::json::array(), ii = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      rr.push_back(m(i, j).real());
      ii.push_back(m(i, j).imag());
    }
    re.push_back(rr);
    im.push_back(ii);
  }
  return re;
}

static Mat matrix_from_parts(const nlohmann::json& j) {
  const int n = j.at("dim").get<int>();
  if (n <= 0) throw std::invalid_argument("matrix json: dim must be positive");
  const auto& re = j.at("re");
  const auto& im = j.contains("im") ? j.at("im") : nlohmann::json();
  if (!re.is_array() || static_cast<int>(re.size()) != n) {
    throw std::invalid_argument("matrix json: 're' must have dim rows");
  }
  Mat m(n, n);
  for (int r = 0; r < n; ++r) {
    if (!re[r].is_array() || static_cast<int>(re[r].size()) != n) {
      throw std::invalid_argument("matrix json: row " + std::to_string(r) + " has wrong length");
    }
    for (int c = 0; c < n; ++c) {
      double x = re[r][c].get<double>();
      double y = im.is_null() ? 0.0 : im.at(r).at(c).get<double>();
      m(r, c) = cplx(x, y);
    }
  }
  return m;
}

nlohmann::json to_json(const Operator& a) {
  nlohmann::json im;
  nlohmann::json re = matrix_parts(a.mat(), im);
  return {{"dim", a.dim()}, {"re", re}, {"im", im}, {"character", to_string(a.character())}};
}

Operator operator_from_json(const nlohmann::json& j) {
  Character c = j.contains("character") ? character_from_string(j.at("character").get<std::string>())
                                        : Character::general;
  return Operator(matrix_from_parts(j), c);
}

nlohmann::json to_json(const StateVector& psi) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (Eigen::Index i = 0; i < psi.vec().size(); ++i) {
    re.push_back(psi.vec()(i).real());
    im.push_back(psi.vec()(i).imag());
  }
  return {{"dim", psi.dim()}, {"re", re}, {"im", im}};
}

StateVector state_from_json(const nlohmann::json& j) {
  const int n = j.at("dim").get<int>();
  const auto& re = j.at("re");
  if (!re.is_array() || static_cast<int>(re.size()) != n) {
    throw std::invalid_argument("state json: 're' must have dim entries");
  }
  Vec v(n);
  for (int i = 0; i < n; ++i) {
    double y = j.contains("im") ? j.at("im").at(i).get<double>() : 0.0;
    v(i) = cplx(re[i].get<double>(), y);
  }
  return StateVector(v);
}

nlohmann::json to_json(const DensityMatrix& rho) {
  nlohmann::json im;
  nlohmann::json re = matrix_parts(rho.mat(), im);
  return {{"dim", rho.dim()}, {"re", re}, {"im", im}, {"character", "hermitian"}};
}

DensityMatrix density_from_json(const nlohmann::json& j) { return DensityMatrix(matrix_from_parts(j)); }

Mat pauli_x() {
  Mat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
Mat pauli_y() {
  Mat m(2, 2);
  m << 0, -I_UNIT, I_UNIT, 0;
  return m;
}
Mat pauli_z() {
  Mat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
Mat identity(int n) { return Mat::Identity(n, n); }

}  // namespace qgeom
