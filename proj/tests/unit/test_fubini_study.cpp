#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "qgeom/fubini_study.hpp"
#include "random_ops.hpp"

using namespace qgeom;
using qgeom::testing::random_hermitian;
using qgeom::testing::random_skew;
using qgeom::testing::random_state;

namespace {

Vec random_vector(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(nd(rng), nd(rng));
  return v;
}

// Horizontal part of a velocity.
Vec horizontal(const Vec& psi, const Vec& v) { return v - psi * psi.dot(v); }

}  // namespace

TEST_CASE("Fubini-Study Lagrangian") {
  std::mt19937_64 rng(41);
  Vec psi = random_state(3, rng);
  CHECK(std::abs(fs_lagrangian({StateVector(psi), Vec(I_UNIT * 0.8 * psi)})) <= 1e-15);
  CHECK(fs_lagrangian({StateVector::basis(2, 0), StateVector::basis(2, 1).vec()}) == doctest::Approx(0.5));
  CHECK(fs_lagrangian({StateVector::basis(2, 0), StateVector::basis(2, 1).vec()}, 3.0) == doctest::Approx(1.5));

  for (int trial = 0; trial < 10; ++trial) {
    Vec p = random_vector(4, rng), v = random_vector(4, rng);
    const cplx lambda(0.3 + trial, -1.1);
    const double a = fs_lagrangian({StateVector(p), v}), b = fs_lagrangian({StateVector(lambda * p), Vec(lambda * v)});
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, a));
    CHECK(a >= 0.0);
    // The Lagrangian is half the squared projective speed on the unit sphere.
    Vec u = p / p.norm(), w = v / p.norm();
    CHECK(std::abs(a - 0.5 * horizontal(u, w).squaredNorm()) <= 1e-12 * std::max(1.0, a));
  }
  CHECK_THROWS(GeodesicState(StateVector(Vec::Zero(2)), Vec::Zero(2)));
}

TEST_CASE("reduced Lagrangian is the energy variance") {
  Mat rho = project_pure(StateVector::basis(2, 0)).mat();
  CHECK(std::abs(fs_reduced_lagrangian(Mat(-I_UNIT * 0.4 * identity(2)), rho)) <= 1e-15);
  CHECK(fs_reduced_lagrangian(Mat(-I_UNIT * pauli_x()), rho) == doctest::Approx(0.5));

  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Mat xi = random_skew(4, rng);
    Vec psi = random_state(4, rng);
    Mat r = projector(psi);
    const double l = fs_reduced_lagrangian(xi, r);
    CHECK(std::abs(l - fs_lagrangian({StateVector(psi), Vec(xi * psi)})) <= 1e-12);
    Mat e = I_UNIT * xi;
    const double m1 = psi.dot(e * psi).real(), m2 = psi.dot(e * e * psi).real();
    CHECK(std::abs(l - 0.5 * (m2 - m1 * m1)) <= 1e-12);
  }
}

TEST_CASE("variational derivatives match finite differences") {
  std::mt19937_64 rng(43);
  const double eps = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    Mat xi = random_skew(3, rng);
    Mat rho = projector(random_state(3, rng));
    Mat drho = random_hermitian(3, rng), dxi = random_skew(3, rng);
    const double fd_rho =
        (fs_reduced_lagrangian(xi, Mat(rho + eps * drho)) - fs_reduced_lagrangian(xi, Mat(rho - eps * drho))) /
        (2 * eps);
    const double fd_xi =
        (fs_reduced_lagrangian(Mat(xi + eps * dxi), rho) - fs_reduced_lagrangian(Mat(xi - eps * dxi), rho)) /
        (2 * eps);
    CHECK(std::abs(fd_rho - pairing(fs_dl_drho(xi, rho), drho)) <= 1e-6);
    CHECK(std::abs(fd_xi - pairing(fs_dl_dxi(xi, rho), dxi)) <= 1e-6);
  }
}

TEST_CASE("conserved operator") {
  CHECK(fs_conserved({StateVector::basis(3, 1), Vec::Zero(3)}).mat().norm() == 0.0);
  Mat want = Mat::Zero(2, 2);
  want(1, 0) = 1.0;
  want(0, 1) = -1.0;
  for (double t : {0.0, 0.3, 1.2, 2.9}) {
    Vec p(2), v(2);
    p << std::cos(t), std::sin(t);
    v << -std::sin(t), std::cos(t);
    CHECK((fs_conserved({StateVector(p), v}).mat() - want).norm() <= 1e-12);
  }
}

TEST_CASE("geodesics") {
  auto still = fs_geodesic({StateVector::basis(2, 0), Vec::Zero(2)}, {0.0, 1.0, 10});
  for (const auto& s : still.values) CHECK((s.psi.vec() - StateVector::basis(2, 0).vec()).norm() <= 1e-15);

  const double tq = std::numbers::pi / 4;
  auto gc = fs_geodesic({StateVector::basis(2, 0), StateVector::basis(2, 1).vec()}, {0.0, tq, 400});
  Vec want(2);
  want << std::cos(tq), std::sin(tq);
  CHECK((gc.back().psi.vec() - want).norm() <= 1e-6);
  CHECK(gc.warnings.empty());

  std::mt19937_64 rng(44);
  Vec psi = random_state(4, rng);
  Vec v = horizontal(psi, random_vector(4, rng));
  GeodesicState s0(StateVector(psi), v);
  auto traj = fs_geodesic(s0, {0.0, 2.0, 2000});
  const Mat m0 = fs_conserved(s0).mat();
  const double l0 = fs_lagrangian(s0);
  for (const auto& s : traj.values) {
    CHECK(std::abs(s.psi.norm() - 1.0) <= 1e-8);
    CHECK(std::abs(fs_connection(s)) <= 1e-8);
    CHECK((fs_conserved(s).mat() - m0).norm() <= 1e-7);
    CHECK(std::abs(fs_lagrangian(s) - l0) <= 1e-8);
    // Projected geodesic equation through the conserved velocity field: psidot = M psi on horizontal data.
    CHECK((fs_conserved(s).mat() * s.psi.vec() - s.psidot).norm() <= 1e-7);
  }
}

TEST_CASE("non-horizontal data sets a warning") {
  Vec v(2);
  v << I_UNIT * 0.5, 1.0;
  auto traj = fs_geodesic({StateVector::basis(2, 0), v}, {0.0, 1.0, 10});
  CHECK_FALSE(traj.warnings.empty());
  CHECK_THROWS(fs_geodesic({StateVector(Vec::Constant(2, 1.0)), v}, {0.0, 1.0, 10}));
}
