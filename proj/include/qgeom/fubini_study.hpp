#pragma once

#include "qgeom/hilbert_core.hpp"
#include "qgeom/integrators.hpp"

namespace qgeom {

struct GeodesicState {
  StateVector psi;
  Vec psidot;

  GeodesicState() = default;
  GeodesicState(StateVector p, Vec v);
};

double fs_lagrangian(const GeodesicState& s, double hbar = 1.0);

// l(xi, rho) = -1/2 (<rho, xi^2> + <rho, i xi>^2), hbar = 1.
double fs_reduced_lagrangian(const Operator& xi, const DensityMatrix& rho);
double fs_reduced_lagrangian(const Mat& xi, const Mat& rho);

// Closed-form variational derivatives of the reduced Lagrangian.
Mat fs_dl_drho(const Mat& xi, const Mat& rho);
Mat fs_dl_dxi(const Mat& xi, const Mat& rho);

Operator fs_conserved(const GeodesicState& s);

// Vertical component <psi|psidot>; zero for horizontal velocities.
cplx fs_connection(const GeodesicState& s);

Trajectory<GeodesicState> fs_geodesic(const GeodesicState& s0, const TimeGrid& grid);

}  // namespace qgeom
