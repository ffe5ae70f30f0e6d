#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "qgeom/hilbert_core.hpp"

namespace qgeom {

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  int steps = 1;

  void validate() const;
  double dt() const { return (t1 - t0) / steps; }
  double time(int k) const { return t0 + k * dt(); }
  std::vector<double> times() const;
};

template <class T>
struct Trajectory {
  std::vector<double> times;
  std::vector<T> values;
  std::vector<std::string> warnings;

  std::size_t size() const { return values.size(); }
  const T& front() const { return values.front(); }
  const T& back() const { return values.back(); }
};

enum class Side { left, right };

using GeneratorFn = std::function<Operator(double)>;

Trajectory<Operator> integrate_propagator(const GeneratorFn& gen, Side side, const Operator& U0,
                                          const TimeGrid& grid);

Trajectory<Operator> integrate_adjoint(const GeneratorFn& gen, const Operator& X0,
                                       const TimeGrid& grid, int sign);

// One exponential-midpoint conjugation step X -> V X V^dagger, V = exp(sign*h*xi).
Mat adjoint_step(const Mat& xi, const Mat& x, double h, int sign);

// Midpoint predictor for state-coupled generators: advance(base, eval, t_eval, h)
// must return base advanced by h using the generator frozen at (t_eval, eval).
template <class State, class Advance>
State midpoint_predictor_step(const State& s, double t, double h, Advance advance) {
  State half = advance(s, s, t, 0.5 * h);
  return advance(s, half, t + 0.5 * h, h);
}

// CSV with a header row: t, then Re/Im of each entry in row-major order.
void write_operator_csv(std::ostream& os, const Trajectory<Operator>& traj);
std::string format_double(double x);

}  // namespace qgeom
