#include "qgeom/integrators.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace qgeom {

void TimeGrid::validate() const {
  if (!(std::isfinite(t0) && std::isfinite(t1))) throw std::invalid_argument("TimeGrid: non-finite bounds");
  if (!(t1 > t0)) throw std::invalid_argument("TimeGrid: t1 must exceed t0");
  if (steps <= 0) throw std::invalid_argument("TimeGrid: steps must be positive");
}

std::vector<double> TimeGrid::times() const {
  std::vector<double> ts(steps + 1);
  for (int k = 0; k <= steps; ++k) ts[k] = time(k);
  return ts;
}

static Mat checked_generator(const GeneratorFn& gen, double t) {
  Operator xi = gen(t);
  if (xi.character() != Character::skew_hermitian && !is_skew_hermitian(xi.mat())) {
    throw std::invalid_argument("integrator: generator at t=" + std::to_string(t) +
                                " is not skew-Hermitian");
  }
  return xi.mat();
}

Trajectory<Operator> integrate_propagator(const GeneratorFn& gen, Side side, const Operator& U0,
                                          const TimeGrid& grid) {
  grid.validate();
  if (!is_unitary(U0.mat())) throw std::invalid_argument("integrate_propagator: U0 is not unitary");
  const double h = grid.dt();
  Trajectory<Operator> out;
  out.times = grid.times();
  out.values.reserve(grid.steps + 1);
  out.values.push_back(Operator::unitary(U0.mat()));
  Mat u = U0.mat();
  for (int k = 0; k < grid.steps; ++k) {
    Mat step = exp_skew(checked_generator(gen, grid.time(k) + 0.5 * h), h);
    u = side == Side::left ? Mat(step * u) : Mat(u * step);
    out.values.push_back(Operator::unitary(u));
  }
  return out;
}

Mat adjoint_step(const Mat& xi, const Mat& x, double h, int sign) {
  Mat v = exp_skew(xi, sign * h);
  return v * x * v.adjoint();
}

Trajectory<Operator> integrate_adjoint(const GeneratorFn& gen, const Operator& X0,
                                       const TimeGrid& grid, int sign) {
  grid.validate();
  if (sign != 1 && sign != -1) throw std::invalid_argument("integrate_adjoint: sign must be +1 or -1");
  const double h = grid.dt();
  Trajectory<Operator> out;
  out.times = grid.times();
  out.values.reserve(grid.steps + 1);
  out.values.push_back(X0);
  Mat x = X0.mat();
  const bool herm = X0.character() == Character::hermitian;
  for (int k = 0; k < grid.steps; ++k) {
    x = adjoint_step(checked_generator(gen, grid.time(k) + 0.5 * h), x, h, sign);
    if (herm) x = hermitian_part(x);
    out.values.push_back(Operator(x, herm ? Character::hermitian : Character::general));
  }
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_operator_csv(std::ostream& os, const Trajectory<Operator>& traj) {
  if (traj.values.empty()) throw std::invalid_argument("write_operator_csv: empty trajectory");
  const int n = traj.values.front().dim();
  os << "t";
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) os << ",re_" << i << "_" << j << ",im_" << i << "_" << j;
  os << "\r\n";
  for (std::size_t k = 0; k < traj.values.size(); ++k) {
    os << format_double(traj.times[k]);
    const Mat& m = traj.values[k].mat();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) os << ',' << format_double(m(i, j).real()) << ',' << format_double(m(i, j).imag());
    os << "\r\n";
  }
}

}  // namespace qgeom
