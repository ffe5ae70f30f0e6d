#pragma once

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "qgeom/hilbert_core.hpp"
#include "qgeom/integrators.hpp"

namespace qgeom {

struct HeisenbergElement {
  RVec h;  // (h_q, h_p)
  double phi = 0.0;

  HeisenbergElement() = default;
  HeisenbergElement(RVec h_, double phi_);
  static HeisenbergElement identity(int n) { return {RVec::Zero(2 * n), 0.0}; }
  int n() const { return static_cast<int>(h.size() / 2); }
};

struct HeisenbergAlgebraElement {
  RVec zeta;
  double phi = 0.0;

  HeisenbergAlgebraElement() = default;
  HeisenbergAlgebraElement(RVec z, double p);
  int n() const { return static_cast<int>(zeta.size() / 2); }
};

// Dual element (nu, alpha) of the Heisenberg algebra.
struct HeisenbergCovector {
  RVec nu;
  double alpha = 0.0;
};

// J = [[0, I], [-I, 0]].
RMat symplectic_J(int n);

struct CanonicalOperators {
  int fock_dim = 32;  // per mode
  int n = 1;
  double hbar = 1.0;
  std::vector<Mat> Z;  // (Q_1..Q_n, P_1..P_n)
  RMat J;

  CanonicalOperators(int fock_dim_, int modes = 1, double hbar_ = 1.0);

  int dim() const { return static_cast<int>(Z.front().rows()); }
  const Mat& Q(int k = 0) const { return Z[k]; }
  const Mat& P(int k = 0) const { return Z[n + k]; }
  // v . J Z
  Mat symplectic_combination(const RVec& v) const;
  // Projector onto product states with every mode index below `levels` (default fock_dim / 4).
  Mat low_projector(int levels = -1) const;
  // Ground state of the number operator.
  Vec vacuum() const;
  // Largest deviation of [Z_j, Z_k] from i hbar J_jk on the lowest fock_dim / 2 states.
  double ccr_defect() const;
};

HeisenbergElement heisenberg_multiply(const HeisenbergElement& g, const HeisenbergElement& h);
HeisenbergElement heisenberg_inverse(const HeisenbergElement& g);

// ad_a b = (0, -zeta_a . J zeta_b).
HeisenbergAlgebraElement heisenberg_ad(const HeisenbergAlgebraElement& a, const HeisenbergAlgebraElement& b);
// Left-invariant bracket [a, b] = -ad_a b, the one iota carries to the commutator.
HeisenbergAlgebraElement heisenberg_bracket(const HeisenbergAlgebraElement& a, const HeisenbergAlgebraElement& b);
// Ad_g a = (zeta, phi + h . J zeta).
HeisenbergAlgebraElement heisenberg_Ad(const HeisenbergElement& g, const HeisenbergAlgebraElement& a);
// Ad*_g (nu, alpha) = (nu - alpha J h, alpha).
HeisenbergCovector heisenberg_coadjoint(const HeisenbergElement& g, const HeisenbergCovector& nu);
double heisenberg_pairing(const HeisenbergCovector& nu, const HeisenbergAlgebraElement& a);

Operator displacement_operator(const HeisenbergElement& h, const CanonicalOperators& ops);
Operator iota(const HeisenbergAlgebraElement& a, const CanonicalOperators& ops);
HeisenbergCovector iota_star(const Operator& mu, const CanonicalOperators& ops);

using SemidirectElement = std::pair<HeisenbergElement, Operator>;

SemidirectElement semidirect_multiply(const SemidirectElement& a, const SemidirectElement& b,
                                      const CanonicalOperators& ops);
SemidirectElement semidirect_identity(const CanonicalOperators& ops);

std::pair<HeisenbergCovector, Operator> semidirect_coadjoint(const SemidirectElement& g, const HeisenbergCovector& nu,
                                                             const Operator& mu, const CanonicalOperators& ops);

// Coherent state U_{z0}|0> centered at z0 = (q, p).
StateVector coherent_state(const RVec& z0, const CanonicalOperators& ops);

// <Z | rho> componentwise.
RVec expectation_Z(const Mat& rho, const CanonicalOperators& ops);

struct HybridState {
  RVec z;
  DensityMatrix rho;

  HybridState() = default;
  HybridState(RVec z_, DensityMatrix r);
};

// Action Phi_(h,U)(z, rho) = (z - h + <U Z U^dagger - Z>, U_h^dagger U^dagger rho U U_h).
HybridState semidirect_action(const SemidirectElement& g, const HybridState& s, const CanonicalOperators& ops);
// Evolution under (h^-1, U^-1): z = z0 + h + <U^dagger Z U - Z | rho0>, rho = U_h U rho0 U^dagger U_h^dagger.
HybridState semidirect_evolution(const HybridState& s0, const HeisenbergElement& h, const Operator& U,
                                 const CanonicalOperators& ops);

using HybridHamiltonianFn = std::function<Operator(const RVec&)>;
using HybridGradientFn = std::function<std::vector<Operator>(const RVec&)>;

class HybridHamiltonian {
 public:
  // Without a gradient, central differences with step 1e-6 (1 + |z|) are used.
  HybridHamiltonian(HybridHamiltonianFn H, int n, HybridGradientFn grad = {});
  // Cross-checks the analytic gradient against finite differences at the probe points.
  HybridHamiltonian(HybridHamiltonianFn H, int n, HybridGradientFn grad, const std::vector<RVec>& probes);

  Operator operator()(const RVec& z) const;
  std::vector<Operator> gradient(const RVec& z) const;
  int n() const { return n_; }
  bool analytic_gradient() const { return static_cast<bool>(grad_); }

 private:
  HybridHamiltonianFn H_;
  HybridGradientFn grad_;
  int n_;
};

std::vector<Operator> finite_difference_gradient(const HybridHamiltonianFn& H, const RVec& z);

// Common builtins: H(z) = P^2/2 + Q^2/2 + x Q, and the phase type h(z) I with h = |z|^2 / 2.
HybridHamiltonian harmonic_coupling(const CanonicalOperators& ops);
HybridHamiltonian phase_type_oscillator(const CanonicalOperators& ops);
// H(z) = H0 with no classical dependence.
HybridHamiltonian uncoupled(const Operator& H0, int n);

struct HybridRhs {
  RVec zdot;
  Operator rhodot;
  Operator K;  // Hermitian generator with i hbar rhodot = [K, rho]
};

// g_k = <rho | d_k H(z)>.
RVec classical_force(const HybridState& s, const HybridHamiltonian& H);
double hybrid_energy(const HybridState& s, const HybridHamiltonian& H);

HybridRhs mean_field_rhs(const HybridState& s, const HybridHamiltonian& H, double hbar = 1.0);
HybridRhs ehrenfest_extended_rhs(const HybridState& s, const HybridHamiltonian& H, const CanonicalOperators& ops,
                                 double hbar = 1.0);

enum class HybridFlow { mean_field, extended };

enum class HybridScheme {
  midpoint_predictor,  // one explicit midpoint evaluation per step, second order
  composed_midpoint    // implicit exponential midpoint in a symmetric triple-jump composition, fourth order
};

struct HybridOptions {
  HybridFlow flow = HybridFlow::mean_field;
  HybridScheme scheme = HybridScheme::composed_midpoint;
  double hbar = 1.0;
};

Trajectory<HybridState> integrate_hybrid(const HybridState& s0, const HybridHamiltonian& H,
                                         const CanonicalOperators& ops, const TimeGrid& grid,
                                         const HybridOptions& opt = {});

// Columns t, z..., <Q>, <P>, energy, purity.
void write_hybrid_csv(std::ostream& os, const Trajectory<HybridState>& traj, const HybridHamiltonian& H,
                      const CanonicalOperators& ops);

}  // namespace qgeom
