#pragma once

#include "qgeom/hilbert_core.hpp"

namespace qgeom {

struct CotangentPoint {
  Operator U;   // unitary
  Operator mu;  // skew-Hermitian momentum, u(n)* identified with u(n)

  CotangentPoint(Operator u, Operator m);
};

enum class Bundle { sphere, projective };

Operator momentum_map_pure(const StateVector& psi, double hbar = 1.0);

Operator coadjoint(const Operator& U, const Operator& mu);

// Projection onto the isotropy block: (1 - rho0) mu (1 - rho0).
Mat isotropy_projection(const Mat& mu, const Mat& rho0);

Operator j1(const CotangentPoint& p, const DensityMatrix& rho0);
double j2(const CotangentPoint& p, const DensityMatrix& rho0);

// Fiber momentum 1/2 (g psi^dagger - psi g^dagger) from the gradient g = dL/dpsidot.
// g is the gradient for the real pairing Re<.,.>, which gives g = -i hbar psi for the
// Dirac-Frenkel Lagrangian and hence -i hbar psi psi^dagger.
Operator legendre_ep(const Vec& dLdpsidot, const StateVector& psi);

Vec df_fiber_derivative(const StateVector& psi, double hbar = 1.0);
Vec fs_fiber_derivative(const StateVector& psi, const Vec& psidot, double hbar = 1.0);

double diagonal_phase_momentum(const Operator& mu, double omega);

Operator mechanical_connection(const Operator& U, const Mat& Udot, const DensityMatrix& rho0, Bundle bundle);

// rho0 = e_n e_n^dagger, the last basis vector.
DensityMatrix reference_state(int n);

// Block-diagonal embedding of an (n-1)x(n-1) matrix and a unit phase into U(n) for rho0 = e_n e_n^dagger.
Mat embed_isotropy(const Mat& block, cplx corner = 1.0);

}  // namespace qgeom
