#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qgeom/hilbert_core.hpp"
#include "random_ops.hpp"

using namespace qgeom;
using qgeom::testing::random_density;
using qgeom::testing::random_hermitian;
using qgeom::testing::random_matrix;
using qgeom::testing::random_skew;
using qgeom::testing::random_state;

TEST_CASE("operator character tags are enforced") {
  CHECK_NOTHROW(Operator::hermitian(pauli_x()));
  CHECK_THROWS_AS(Operator::hermitian(I_UNIT * pauli_x()), std::invalid_argument);
  CHECK_NOTHROW(Operator::skew(I_UNIT * pauli_x()));
  CHECK_THROWS_AS(Operator::skew(pauli_x()), std::invalid_argument);
  CHECK_THROWS_AS(Operator::unitary(2.0 * identity(2)), std::invalid_argument);
  CHECK_THROWS_AS(Operator(Mat::Zero(2, 3)), std::invalid_argument);
  for (auto c : {Character::general, Character::hermitian, Character::skew_hermitian, Character::unitary})
    CHECK(character_from_string(to_string(c)) == c);
}

TEST_CASE("hermitian tolerance is relative to the norm") {
  Mat big = 1e6 * pauli_z();
  big(0, 1) = 1e-7;  // defect 1.4e-7 against 1e-12 * (1 + 1.4e6)
  CHECK_NOTHROW(Operator::hermitian(big));
  Mat small = pauli_z();
  small(0, 1) = 1e-9;
  CHECK_THROWS(Operator::hermitian(small));
}

TEST_CASE("pairing") {
  CHECK(pairing(identity(2), identity(2)) == doctest::Approx(2.0));
  CHECK(std::abs(pairing(pauli_x(), pauli_y())) < 1e-15);

  std::mt19937_64 rng(11);
  Mat a = random_matrix(4, rng), b = random_matrix(4, rng);
  double brute = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) brute += (std::conj(a(i, j)) * b(i, j)).real();
  CHECK(std::abs(pairing(a, b) - brute) <= 1e-13);
  CHECK(std::abs(pairing(a, b) - pairing(b, a)) <= 1e-13);
  CHECK(std::abs(pairing(Mat(I_UNIT * a), b) - inner(a, b).imag()) <= 1e-13);
  CHECK_THROWS_AS(pairing(identity(2), identity(3)), std::invalid_argument);
}

TEST_CASE("brackets") {
  std::mt19937_64 rng(12);
  Mat a = random_matrix(3, rng);
  CHECK(commutator(a, a).norm() == 0.0);
  CHECK((commutator(pauli_x(), pauli_y()) - 2.0 * I_UNIT * pauli_z()).norm() < 1e-15);
  CHECK((anticommutator(pauli_x(), pauli_x()) - 2.0 * identity(2)).norm() < 1e-15);

  Operator h1 = Operator::hermitian(random_hermitian(3, rng)), h2 = Operator::hermitian(random_hermitian(3, rng));
  Operator c = bracket(h1, h2, BracketKind::commutator);
  CHECK(c.character() == Character::skew_hermitian);
  CHECK(bracket(h1, h2, BracketKind::anticommutator).character() == Character::hermitian);
  CHECK_THROWS_AS(commutator(identity(2), identity(3)), std::invalid_argument);
}

TEST_CASE("commutator is antisymmetric and satisfies Jacobi") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    Mat a = random_matrix(4, rng), b = random_matrix(4, rng), c = random_matrix(4, rng);
    CHECK((commutator(a, b) + commutator(b, a)).norm() <= 1e-12);
    Mat jac = commutator(a, commutator(b, c)) + commutator(b, commutator(c, a)) + commutator(c, commutator(a, b));
    CHECK(jac.norm() <= 1e-12);
  }
}

TEST_CASE("project_pure") {
  Mat e1 = project_pure(StateVector::basis(3, 0)).mat();
  Mat want = Mat::Zero(3, 3);
  want(0, 0) = 1.0;
  CHECK((e1 - want).norm() == 0.0);

  Vec plus(2);
  plus << 1.0, 1.0;
  Mat half = project_pure(StateVector(plus / std::sqrt(2.0))).mat();
  CHECK((half - Mat::Constant(2, 2, 0.5)).norm() <= 1e-15);

  std::mt19937_64 rng(14);
  Vec psi = random_state(4, rng);
  Mat r = project_pure(StateVector(psi)).mat();
  CHECK((r * r - r).norm() <= 1e-12);
  Mat rp = project_pure(StateVector(std::polar(1.0, 0.7) * psi)).mat();
  CHECK((rp - r).norm() <= 1e-13);
  // Unnormalized input is rescaled.
  CHECK((project_pure(StateVector(3.0 * psi)).mat() - r).norm() <= 1e-13);
  CHECK_THROWS_AS(project_pure(StateVector(Vec::Zero(2))), std::invalid_argument);
}

TEST_CASE("density matrix checks") {
  std::mt19937_64 rng(15);
  DensityMatrix r(random_density(4, rng));
  CHECK_FALSE(r.is_pure());
  CHECK(std::abs(r.purity() - (r.mat() * r.mat()).trace().real()) < 1e-14);
  CHECK_THROWS(DensityMatrix(2.0 * identity(2)));
  RVec w(2);
  w << 1.5, -0.5;
  CHECK_THROWS(DensityMatrix::diagonal(w));
  CHECK(project_pure(StateVector(random_state(3, rng))).is_pure());
}

TEST_CASE("expectation") {
  std::mt19937_64 rng(16);
  DensityMatrix r(random_density(3, rng));
  CHECK(std::abs(expectation(r, Operator::identity(3)) - 1.0) < 1e-14);
  RVec w(2);
  w << 1.0, 0.0;
  CHECK(std::abs(expectation(DensityMatrix::diagonal(w), Operator::hermitian(pauli_z())) - 1.0) < 1e-15);
  cplx e = expectation(r, Operator::hermitian(random_hermitian(3, rng)));
  CHECK(std::abs(e.imag()) <= 1e-12);
  CHECK_THROWS(expectation(r, Operator::identity(2)));
}

TEST_CASE("exp_generator") {
  CHECK((exp_generator(Operator::zero(3), 2.5).mat() - identity(3)).norm() == 0.0);

  Operator xi = Operator::skew(-0.5 * I_UNIT * pauli_z());
  Mat u = exp_generator(xi, std::numbers::pi).mat();
  Mat want = Mat::Zero(2, 2);
  want(0, 0) = std::polar(1.0, -std::numbers::pi / 2);
  want(1, 1) = std::polar(1.0, std::numbers::pi / 2);
  CHECK((u - want).norm() <= 1e-15);

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ut(0.0, 10.0);
  for (int trial = 0; trial < 10; ++trial) {
    Operator g = Operator::skew(random_skew(5, rng));
    const double t = ut(rng);
    Mat e = exp_generator(g, t).mat();
    CHECK(unitary_defect(e) <= 1e-12);
    const double s = ut(rng);
    CHECK((exp_generator(g, s + t).mat() - exp_generator(g, s).mat() * e).norm() <= 1e-11);
  }

  // Small generator against a plain Taylor series.
  Mat g = random_skew(4, rng, 0.1);
  CHECK((exp_skew(g, 1.0) - qgeom::testing::taylor_exp(g)).norm() <= 1e-14);
  CHECK_THROWS_AS(exp_generator(Operator::hermitian(pauli_x()), 1.0), std::invalid_argument);
}

TEST_CASE("json round trip is bit-faithful") {
  std::mt19937_64 rng(18);
  Operator a = Operator::hermitian(random_hermitian(3, rng));
  Operator b = operator_from_json(nlohmann::json::parse(to_json(a).dump()));
  CHECK(b.character() == Character::hermitian);
  CHECK((a.mat() - b.mat()).norm() == 0.0);

  StateVector psi(random_state(4, rng));
  CHECK((state_from_json(nlohmann::json::parse(to_json(psi).dump())).vec() - psi.vec()).norm() == 0.0);

  DensityMatrix r(random_density(3, rng));
  CHECK((density_from_json(nlohmann::json::parse(to_json(r).dump())).mat() - r.mat()).norm() == 0.0);

  nlohmann::json bad = to_json(a);
  bad["re"][0].push_back(1.0);
  CHECK_THROWS(operator_from_json(bad));
}
