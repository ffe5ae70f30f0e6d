#include "qgeom/wigner_moyal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>

#include "qgeom/schrodinger_ep.hpp"

namespace qgeom {

namespace {

constexpr double kPi = std::numbers::pi;

// exp(2 pi i m / den) with m reduced first, so large integer phases stay exact.
cplx root_of_unity(long long m, long long den) {
  m %= den;
  if (m < 0) m += den;
  return std::polar(1.0, 2.0 * kPi * static_cast<double>(m) / static_cast<double>(den));
}

int wrap_index(int v, int n) { return ((v + n / 2) % n + n) % n - n / 2; }
int mod(int v, int n) { return (v % n + n) % n; }

void check_same(const PhaseSpaceGrid& a, const PhaseSpaceGrid& b, const char* what) {
  if (!(a == b)) throw std::invalid_argument(std::string(what) + ": grid mismatch");
}

}  // namespace

PhaseSpaceGrid::PhaseSpaceGrid(int n, double dx_, double hbar_) : N(n), dx(dx_), hbar(hbar_) {
  if (N <= 0 || N % 2 != 0) throw std::invalid_argument("PhaseSpaceGrid: N must be even and positive");
  if (!(dx > 0.0) || !std::isfinite(dx)) throw std::invalid_argument("PhaseSpaceGrid: dx must be positive");
  if (!(hbar > 0.0) || !std::isfinite(hbar)) throw std::invalid_argument("PhaseSpaceGrid: hbar must be positive");
}

double PhaseSpaceGrid::dp() const { return 2.0 * kPi * hbar / (N * dx); }

RVec PhaseSpaceGrid::xs() const {
  RVec v(N);
  for (int j = 0; j < N; ++j) v(j) = x(j);
  return v;
}

RVec PhaseSpaceGrid::ps() const {
  RVec v(N);
  for (int k = 0; k < N; ++k) v(k) = p(k);
  return v;
}

double WignerFunction::integral() const { return values.sum() * grid.dx * grid.dp(); }

double WignerFunction::mean_x() const {
  return (grid.xs().transpose() * values).sum() * grid.dx * grid.dp();
}

double WignerFunction::mean_p() const {
  return (values * grid.ps()).sum() * grid.dx * grid.dp();
}

ChordBasis::ChordBasis(const PhaseSpaceGrid& g) : g_(g) {
  const int N = g.N;
  const int h = N / 2;
  // T(s,l)^dagger must equal T(-s,-l); where the partner is already fixed the phase is
  // chosen to make that hold, otherwise the symmetric choice omega^(-s l / 2).
  phase_ = Mat::Zero(N, N);
  std::vector<char> set(static_cast<std::size_t>(N) * N, 0);
  for (int si = 0; si < N; ++si) {
    for (int li = 0; li < N; ++li) {
      const int s = si - h, l = li - h;
      const int s2 = wrap_index(-s, N), l2 = wrap_index(-l, N);
      const std::size_t partner = static_cast<std::size_t>(l2 + h) * N + (s2 + h);
      cplx ph;
      if (set[partner]) {
        ph = std::conj(phase_(l2 + h, s2 + h)) * root_of_unity(-static_cast<long long>(s2) * l2, N);
      } else {
        ph = root_of_unity(-static_cast<long long>(s) * l, 2LL * N);
      }
      phase_(li, si) = ph;
      set[static_cast<std::size_t>(li) * N + si] = 1;
    }
  }
  ex_.resize(N, N);
  ep_.resize(N, N);
  for (int j = 0; j < N; ++j)
    for (int li = 0; li < N; ++li) ex_(j, li) = root_of_unity(static_cast<long long>(j - h) * (li - h), N);
  for (int k = 0; k < N; ++k)
    for (int si = 0; si < N; ++si) ep_(k, si) = root_of_unity(-static_cast<long long>(k - h) * (si - h), N);
}

Mat ChordBasis::chord(const Mat& a) const {
  const int N = g_.N, h = N / 2;
  if (a.rows() != N || a.cols() != N) throw std::invalid_argument("wigner_transform: dimension mismatch with grid");
  Mat chi(N, N);
  for (int li = 0; li < N; ++li) {
    const int l = li - h;
    for (int si = 0; si < N; ++si) {
      const int s = si - h;
      cplx acc = 0.0;
      for (int b = 0; b < N; ++b) {
        const int r = mod(b + s, N);
        acc += std::conj(root_of_unity(static_cast<long long>(r - h) * l, N)) * a(r, b);
      }
      chi(li, si) = std::conj(phase_(li, si)) * acc;
    }
  }
  return chi;
}

Mat ChordBasis::operator_from_chord(const Mat& chi) const {
  const int N = g_.N, h = N / 2;
  Mat a(N, N);
  for (int r = 0; r < N; ++r) {
    for (int b = 0; b < N; ++b) {
      const int si = wrap_index(r - b, N) + h;
      cplx acc = 0.0;
      for (int li = 0; li < N; ++li) {
        acc += chi(li, si) * phase_(li, si) * root_of_unity(static_cast<long long>(r - h) * (li - h), N);
      }
      a(r, b) = acc / static_cast<double>(N);
    }
  }
  return a;
}

Mat ChordBasis::to_phase_space(const Mat& chi) const {
  const double c = 1.0 / (double(g_.N) * g_.N * g_.dx * g_.dp());
  return c * (ex_ * chi * ep_.transpose());
}

Mat ChordBasis::from_phase_space(const Mat& w) const {
  return (ex_.adjoint() * w * ep_.conjugate()) * (g_.dx * g_.dp());
}

namespace {

Mat complex_transform(const ChordBasis& cb, const Mat& a) { return cb.to_phase_space(cb.chord(a)); }

RMat real_values(const Mat& w, const char* what) {
  const double scale = std::max(1.0, w.cwiseAbs().maxCoeff());
  const double resid = w.imag().cwiseAbs().maxCoeff();
  if (resid > 1e-10 * scale) {
    throw std::invalid_argument(std::string(what) + ": imaginary residue " + std::to_string(resid) +
                                " (operator not Hermitian)");
  }
  return w.real();
}

Mat inverse_transform(const ChordBasis& cb, const RMat& w) {
  return cb.operator_from_chord(cb.from_phase_space(w.cast<cplx>()));
}

}  // namespace

WignerFunction wigner_transform(const Mat& A, const PhaseSpaceGrid& grid) {
  ChordBasis cb(grid);
  return {grid, real_values(complex_transform(cb, A), "wigner_transform")};
}

WignerFunction wigner_transform(const Operator& A, const PhaseSpaceGrid& grid) {
  return wigner_transform(A.mat(), grid);
}

Operator weyl_inverse(const WignerFunction& a) {
  if (a.values.rows() != a.grid.N || a.values.cols() != a.grid.N) {
    throw std::invalid_argument("weyl_inverse: values do not match grid");
  }
  ChordBasis cb(a.grid);
  return Operator::hermitian(hermitian_part(inverse_transform(cb, a.values)));
}

WignerFunction weyl_symbol(const Operator& A, const PhaseSpaceGrid& grid) {
  WignerFunction w = wigner_transform(A, grid);
  w.values *= 2.0 * kPi * grid.hbar;
  return w;
}

Operator weyl_quantize(const WignerFunction& symbol) {
  Operator a = weyl_inverse(symbol);
  return Operator::hermitian(a.mat() / (2.0 * kPi * symbol.grid.hbar));
}

WignerFunction moyal_bracket(const WignerFunction& a, const WignerFunction& b) {
  check_same(a.grid, b.grid, "moyal_bracket");
  const PhaseSpaceGrid& g = a.grid;
  ChordBasis cb(g);
  const double s = 2.0 * kPi * g.hbar;
  Mat A = inverse_transform(cb, a.values) / s;
  Mat B = inverse_transform(cb, b.values) / s;
  Mat c = complex_transform(cb, commutator(A, B)) * s / (I_UNIT * g.hbar);
  return {g, real_values(c, "moyal_bracket")};
}

Operator position_operator(const PhaseSpaceGrid& g) {
  Mat q = Mat::Zero(g.N, g.N);
  for (int j = 0; j < g.N; ++j) q(j, j) = g.x(j);
  return Operator::hermitian(q);
}

Operator momentum_operator(const PhaseSpaceGrid& g) {
  return weyl_quantize(sample(g, [](double, double p) { return p; }));
}

StateVector grid_coherent_state(const PhaseSpaceGrid& g, double x0, double p0) {
  Vec v(g.N);
  for (int j = 0; j < g.N; ++j) {
    const double x = g.x(j);
    v(j) = std::exp(-(x - x0) * (x - x0) / (2.0 * g.hbar)) * std::polar(1.0, p0 * x / g.hbar);
  }
  return StateVector(v / v.norm());
}

Trajectory<WignerFunction> evolve_wigner(const Operator& H, const WignerFunction& W0, const TimeGrid& grid) {
  const PhaseSpaceGrid& g = W0.grid;
  if (H.dim() != g.N) throw std::invalid_argument("evolve_wigner: H dimension does not match grid");
  ChordBasis cb(g);
  DensityMatrix rho0(hermitian_part(inverse_transform(cb, W0.values)));
  Trajectory<DensityMatrix> rho = solve_von_neumann(constant_hamiltonian(H), rho0, grid, g.hbar);
  Trajectory<WignerFunction> out;
  out.times = rho.times;
  out.values.reserve(rho.size());
  for (const auto& r : rho.values) {
    out.values.push_back({g, real_values(complex_transform(cb, r.mat()), "evolve_wigner")});
  }
  return out;
}

void write_wigner_csv(std::ostream& os, const WignerFunction& w) {
  os << "x,p,W\r\n";
  for (int j = 0; j < w.grid.N; ++j)
    for (int k = 0; k < w.grid.N; ++k)
      os << format_double(w.grid.x(j)) << ',' << format_double(w.grid.p(k)) << ','
         << format_double(w.values(j, k)) << "\r\n";
}

void write_wigner_pgm(std::ostream& os, const WignerFunction& w) {
  const int N = w.grid.N;
  const double lo = w.values.minCoeff(), hi = w.values.maxCoeff();
  const double span = hi > lo ? hi - lo : 1.0;
  // Rows run from high to low momentum, columns over position.
  os << "P2\n" << N << ' ' << N << "\n255\n";
  for (int k = N - 1; k >= 0; --k) {
    for (int j = 0; j < N; ++j) {
      int v = static_cast<int>(std::lround(255.0 * (w.values(j, k) - lo) / span));
      os << v << (j + 1 < N ? ' ' : '\n');
    }
  }
}

}  // namespace qgeom
