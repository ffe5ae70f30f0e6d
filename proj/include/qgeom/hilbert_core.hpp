#pragma once

#include <Eigen/Dense>

#include <complex>
#include <string>

#include "json.hpp"

namespace qgeom {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

inline constexpr cplx I_UNIT{0.0, 1.0};

enum class Character { general, hermitian, skew_hermitian, unitary };

std::string to_string(Character c);
Character character_from_string(const std::string& s);

// Tolerances attached to the character tags.
namespace tol {
inline constexpr double hermitian_rel = 1e-12;
inline constexpr double unitary = 1e-10;
inline constexpr double normalized = 1e-10;
inline constexpr double density_trace = 1e-10;
inline constexpr double density_eig = -1e-10;
inline constexpr double pure = 1e-9;
}  // namespace tol

double hermitian_defect(const Mat& a);
double skew_defect(const Mat& a);
double unitary_defect(const Mat& a);

bool is_hermitian(const Mat& a);
bool is_skew_hermitian(const Mat& a);
bool is_unitary(const Mat& a);

class Operator {
 public:
  Operator() = default;
  explicit Operator(Mat entries, Character character = Character::general);

  static Operator hermitian(Mat m) { return Operator(std::move(m), Character::hermitian); }
  static Operator skew(Mat m) { return Operator(std::move(m), Character::skew_hermitian); }
  static Operator unitary(Mat m) { return Operator(std::move(m), Character::unitary); }
  static Operator identity(int n, Character c = Character::unitary);
  static Operator zero(int n, Character c = Character::skew_hermitian);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  Character character() const { return c_; }

  Operator adjoint() const;

 private:
  Mat m_;
  Character c_ = Character::general;
};

class StateVector {
 public:
  StateVector() = default;
  explicit StateVector(Vec amplitudes);

  static StateVector basis(int n, int k);

  int dim() const { return static_cast<int>(v_.size()); }
  const Vec& vec() const { return v_; }
  double norm() const { return v_.norm(); }
  bool normalized() const;
  StateVector normalized_copy() const;

 private:
  Vec v_;
};

class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Mat entries);

  static DensityMatrix diagonal(const RVec& weights);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Mat& mat() const { return m_; }
  double purity() const;
  double pure_defect() const;
  bool is_pure() const { return pure_defect() <= tol::pure; }
  RVec eigenvalues() const;

 private:
  Mat m_;
};

enum class BracketKind { commutator, anticommutator };

Mat commutator(const Mat& a, const Mat& b);
Mat anticommutator(const Mat& a, const Mat& b);

cplx inner(const Mat& a, const Mat& b);  // Tr(A^dagger B)
double pairing(const Mat& a, const Mat& b);
double pairing(const Operator& a, const Operator& b);

Operator bracket(const Operator& a, const Operator& b, BracketKind kind);

DensityMatrix project_pure(const StateVector& psi);
Mat projector(const Vec& psi);

cplx expectation(const DensityMatrix& rho, const Operator& a);

Operator exp_generator(const Operator& xi, double t);
Mat exp_skew(const Mat& xi, double t);

RVec hermitian_spectrum(const Mat& a);
Mat hermitian_part(const Mat& a);
Mat skew_part(const Mat& a);

nlohmann::json to_json(const Operator& a);
Operator operator_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StateVector& psi);
StateVector state_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DensityMatrix& rho);
DensityMatrix density_from_json(const nlohmann::json& j);

// Pauli matrices and friends.
Mat pauli_x();
Mat pauli_y();
Mat pauli_z();
Mat identity(int n);

}  // namespace qgeom
