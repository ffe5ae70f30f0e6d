#pragma once

#include <array>

#include "qgeom/hilbert_core.hpp"
#include "qgeom/integrators.hpp"
#include "qgeom/schrodinger_ep.hpp"

namespace qgeom {

enum class GaugeForm {
  anticommutator,  // xi_H = -i H_H / hbar + {1 - 2 rho0, kappa}, rho0 pure
  commuting        // xi_H = -i H_H / hbar + kappa with [kappa, rho0] = 0, rho0 may be mixed
};

struct HeisenbergSystem {
  Operator H_H;
  DensityMatrix rho0;
  KappaFn kappa;  // empty means zero
  double hbar = 1.0;
  GaugeForm form = GaugeForm::anticommutator;

  static HeisenbergSystem pure(const Operator& H, const DensityMatrix& rho0, KappaFn kappa = {}, double hbar = 1.0);
  static HeisenbergSystem mixed(const Operator& H, const DensityMatrix& rho0, KappaFn kappa = {}, double hbar = 1.0);

  int dim() const { return H_H.dim(); }
  Mat kappa_at(double t) const;
  // Gauge part of the generator, {1 - 2 rho0, kappa} or kappa.
  Mat gauge_part(double t) const;
};

Operator heisenberg_generator(const HeisenbergSystem& sys, double t);

Trajectory<Operator> evolve_heisenberg(const HeisenbergSystem& sys, const TimeGrid& grid);
Trajectory<Operator> evolve_observable(const Operator& A0, const HeisenbergSystem& sys, const TimeGrid& grid);
Trajectory<Operator> propagator_from_heisenberg(const HeisenbergSystem& sys, const Operator& U0,
                                                const TimeGrid& grid);

Operator fs_heisenberg_residual(const Operator& xiH, const Operator& xiHdot, const DensityMatrix& rho0);

// Spin-1/2 operators S = hbar sigma / 2.
std::array<Mat, 3> spin_half(double hbar = 1.0);

struct DiracSystem {
  Operator H0I;
  Operator H1I;
  DensityMatrix rhoI;
  DensityMatrix rho_bar0;
  KappaFn kappa;
  double hbar = 1.0;

  DiracSystem() = default;
  DiracSystem(Operator h0, Operator h1, DensityMatrix rho, DensityMatrix rbar, KappaFn k = {}, double hb = 1.0);

  int dim() const { return H0I.dim(); }
  Mat gauge_part(double t) const;
  double total_energy() const;  // <rho_I | H0I + H1I>
  double free_energy() const;   // <rho_bar0 | H0I>
};

struct DiracRun {
  Trajectory<DiracSystem> states;
  Trajectory<Operator> U0;  // xi_0 = U0^-1 dU0/dt
};

DiracRun dirac_flow_full(const DiracSystem& sys, const TimeGrid& grid);
Trajectory<DiracSystem> dirac_flow(const DiracSystem& sys, const TimeGrid& grid);

// xi_0 = -i H0I / hbar + {1 - 2 rho_bar0, kappa}.
Operator dirac_free_generator(const DiracSystem& sys, double t);

}  // namespace qgeom
