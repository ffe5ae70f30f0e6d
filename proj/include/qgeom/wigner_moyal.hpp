#pragma once

#include <iosfwd>
#include <vector>

#include "qgeom/hilbert_core.hpp"
#include "qgeom/integrators.hpp"

namespace qgeom {

struct PhaseSpaceGrid {
  int N = 64;
  double dx = 0.35;
  double hbar = 1.0;

  PhaseSpaceGrid() = default;
  PhaseSpaceGrid(int n, double dx_, double hbar_ = 1.0);

  double dp() const;
  double x(int j) const { return (j - N / 2) * dx; }
  double p(int k) const { return (k - N / 2) * dp(); }
  RVec xs() const;
  RVec ps() const;
  bool operator==(const PhaseSpaceGrid& o) const { return N == o.N && dx == o.dx && hbar == o.hbar; }
};

struct WignerFunction {
  PhaseSpaceGrid grid;
  RMat values;  // values(j, k) = W(x_j, p_k)

  double integral() const;                    // sum W dx dp
  double mean_x() const;
  double mean_p() const;
};

// Phase-space translation basis T(s, l) on the periodic position grid, with
// Tr(T(s,l)^dagger T(s',l')) = N delta. Shared by the forward and inverse maps.
class ChordBasis {
 public:
  explicit ChordBasis(const PhaseSpaceGrid& g);

  const PhaseSpaceGrid& grid() const { return g_; }
  // chi(l, s) = Tr(T(s,l)^dagger A), indices offset by N/2.
  Mat chord(const Mat& a) const;
  Mat operator_from_chord(const Mat& chi) const;
  Mat to_phase_space(const Mat& chi) const;
  Mat from_phase_space(const Mat& w) const;

 private:
  PhaseSpaceGrid g_;
  Mat phase_;  // phase_(l, s)
  Mat ex_, ep_;
};

WignerFunction wigner_transform(const Operator& A, const PhaseSpaceGrid& grid);
WignerFunction wigner_transform(const Mat& A, const PhaseSpaceGrid& grid);
Operator weyl_inverse(const WignerFunction& a);

// Weyl symbol sigma(A) = 2 pi hbar W(A); sigma(I) = 1, sigma(Q) = x.
WignerFunction weyl_symbol(const Operator& A, const PhaseSpaceGrid& grid);
Operator weyl_quantize(const WignerFunction& symbol);

// {{a, b}} = sigma([sigma^-1 a, sigma^-1 b]) / (i hbar), i.e. the commutator carried to symbols.
WignerFunction moyal_bracket(const WignerFunction& a, const WignerFunction& b);

// Sample f(x_j, p_k) on the grid.
template <class F>
WignerFunction sample(const PhaseSpaceGrid& g, F f) {
  WignerFunction w{g, RMat(g.N, g.N)};
  for (int j = 0; j < g.N; ++j)
    for (int k = 0; k < g.N; ++k) w.values(j, k) = f(g.x(j), g.p(k));
  return w;
}

// Position and momentum operators on the grid: Q diagonal, P the Weyl quantization of p.
Operator position_operator(const PhaseSpaceGrid& g);
Operator momentum_operator(const PhaseSpaceGrid& g);

// Gaussian wave packet centered at (x0, p0) with width sqrt(hbar), sampled and normalized.
StateVector grid_coherent_state(const PhaseSpaceGrid& g, double x0, double p0);

Trajectory<WignerFunction> evolve_wigner(const Operator& H, const WignerFunction& W0, const TimeGrid& grid);

void write_wigner_csv(std::ostream& os, const WignerFunction& w);
void write_wigner_pgm(std::ostream& os, const WignerFunction& w);

}  // namespace qgeom
