#pragma once

#include <functional>
#include <vector>

#include "qgeom/hilbert_core.hpp"
#include "qgeom/integrators.hpp"

namespace qgeom {

using HamiltonianFn = std::function<Operator(double)>;
using KappaFn = std::function<Operator(double)>;

HamiltonianFn constant_hamiltonian(const Operator& H);

struct GaugeChoice {
  KappaFn kappa;  // empty means kappa = 0

  static GaugeChoice zero() { return {}; }
  static GaugeChoice constant(const Operator& k);
  static GaugeChoice piecewise(std::vector<double> breakpoints, std::vector<Operator> values);

  bool is_zero() const { return !kappa; }
  Mat at(double t, int n) const;
  // alpha = 2 hbar <i rho, kappa>, the phase rate in i hbar psidot = H psi + alpha psi.
  double alpha(const DensityMatrix& rho, double t, double hbar) const;
};

// xi = -i H / hbar + {1 - 2 rho, kappa}; checks [i hbar xi - H, rho] = 0.
Operator gauge_generator(const Operator& H, const DensityMatrix& rho, const Operator& kappa, double hbar);
Mat gauge_term(const Mat& rho, const Mat& kappa);

struct SchrodingerRun {
  Trajectory<StateVector> states;
  Trajectory<Operator> propagator;
};

SchrodingerRun solve_schrodinger_full(const HamiltonianFn& H, const StateVector& psi0,
                                      const GaugeChoice& gauge, const TimeGrid& grid, double hbar = 1.0);

Trajectory<StateVector> solve_schrodinger(const HamiltonianFn& H, const StateVector& psi0,
                                          const GaugeChoice& gauge, const TimeGrid& grid, double hbar = 1.0);

Vec projective_residual(const StateVector& psi, const Vec& psidot, const Operator& H, double hbar = 1.0);

Trajectory<DensityMatrix> solve_von_neumann(const HamiltonianFn& H, const DensityMatrix& rho0,
                                            const TimeGrid& grid, double hbar = 1.0);

// Mixed-state particular solution xi = -i/hbar (H + sum_n c_n rho^n), n = 1, 2, ...
Operator mixed_generator(const Operator& H, const DensityMatrix& rho, const std::vector<double>& coeffs,
                         double hbar = 1.0);

Trajectory<DensityMatrix> solve_von_neumann_gauged(const HamiltonianFn& H, const DensityMatrix& rho0,
                                                   const std::vector<double>& coeffs, const TimeGrid& grid,
                                                   double hbar = 1.0);

}  // namespace qgeom
