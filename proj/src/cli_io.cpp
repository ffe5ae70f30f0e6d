#include "qgeom/cli_io.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include "qgeom/fubini_study.hpp"
#include "qgeom/heisenberg_dirac.hpp"
#include "qgeom/hybrid_cq.hpp"
#include "qgeom/integrators.hpp"
#include "qgeom/momentum_maps.hpp"
#include "qgeom/schrodinger_ep.hpp"
#include "qgeom/wigner_moyal.hpp"

namespace qgeom {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<Picture, std::string>>& picture_table() {
  static const std::vector<std::pair<Picture, std::string>> t = {
      {Picture::schrodinger, "schrodinger"}, {Picture::von_neumann, "von_neumann"},
      {Picture::heisenberg, "heisenberg"},   {Picture::dirac, "dirac"},
      {Picture::wigner, "wigner"},           {Picture::fs_geodesic, "fs_geodesic"},
      {Picture::mean_field, "mean_field"},   {Picture::ehrenfest_extended, "ehrenfest_extended"}};
  return t;
}

bool is_hybrid(Picture p) { return p == Picture::mean_field || p == Picture::ehrenfest_extended; }

}  // namespace

std::string to_string(Picture p) {
  for (const auto& [k, v] : picture_table())
    if (k == p) return v;
  return "unknown";
}

std::optional<Picture> picture_from_string(const std::string& s) {
  for (const auto& [k, v] : picture_table())
    if (v == s) return k;
  return std::nullopt;
}

const std::vector<std::string>& picture_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& e : picture_table()) out.push_back(e.second);
    return out;
  }();
  return names;
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error([&] {
        std::string m = "invalid configuration:";
        for (const auto& e : errors) m += "\n  " + e;
        return m;
      }()),
      errors_(std::move(errors)) {}

// ---------------------------------------------------------------------------
// JSON field readers that record errors instead of throwing.

namespace {

struct Errors {
  std::vector<std::string> list;
  void add(std::string s) { list.push_back(std::move(s)); }
};

std::optional<double> read_number(const json& j, const std::string& path, Errors& err) {
  if (!j.is_number()) {
    err.add(path + ": expected a number");
    return std::nullopt;
  }
  double v = j.get<double>();
  if (!std::isfinite(v)) {
    err.add(path + ": must be finite");
    return std::nullopt;
  }
  return v;
}

std::optional<std::vector<double>> read_reals(const json& j, const std::string& path, Errors& err) {
  if (!j.is_array()) {
    err.add(path + ": expected an array of numbers");
    return std::nullopt;
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    auto v = read_number(j[i], path + "[" + std::to_string(i) + "]", err);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

RVec to_rvec(const std::vector<double>& v) { return Eigen::Map<const RVec>(v.data(), static_cast<Eigen::Index>(v.size())); }

// A complex vector is {"re": [...], "im": [...]} or a plain real array.
std::optional<Vec> read_cvector(const json& j, const std::string& path, Errors& err) {
  if (j.is_array()) {
    auto re = read_reals(j, path, err);
    if (!re) return std::nullopt;
    return Vec(to_rvec(*re).cast<cplx>());
  }
  if (!j.is_object() || !j.contains("re")) {
    err.add(path + ": expected {\"re\": [...], \"im\": [...]} or an array");
    return std::nullopt;
  }
  auto re = read_reals(j["re"], path + ".re", err);
  if (!re) return std::nullopt;
  std::vector<double> im(re->size(), 0.0);
  if (j.contains("im")) {
    auto v = read_reals(j["im"], path + ".im", err);
    if (!v) return std::nullopt;
    if (v->size() != re->size()) {
      err.add(path + ": re and im have different lengths");
      return std::nullopt;
    }
    im = *v;
  }
  Vec out(re->size());
  for (std::size_t i = 0; i < re->size(); ++i) out(i) = cplx((*re)[i], im[i]);
  return out;
}

std::optional<RMat> read_real_matrix(const json& j, const std::string& path, Errors& err) {
  if (!j.is_array() || j.empty()) {
    err.add(path + ": expected a non-empty array of rows");
    return std::nullopt;
  }
  const std::size_t rows = j.size();
  RMat m;
  for (std::size_t r = 0; r < rows; ++r) {
    auto row = read_reals(j[r], path + "[" + std::to_string(r) + "]", err);
    if (!row) return std::nullopt;
    if (r == 0) m.resize(rows, row->size());
    if (row->size() != static_cast<std::size_t>(m.cols())) {
      err.add(path + ": rows have different lengths");
      return std::nullopt;
    }
    for (std::size_t c = 0; c < row->size(); ++c) m(r, c) = (*row)[c];
  }
  if (m.rows() != m.cols()) {
    err.add(path + ": matrix must be square (" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")");
    return std::nullopt;
  }
  return m;
}

// A complex matrix is {"re": [[...]], "im": [[...]]} or a plain real nested array.
std::optional<Mat> read_cmatrix(const json& j, const std::string& path, Errors& err) {
  if (j.is_array()) {
    auto re = read_real_matrix(j, path, err);
    if (!re) return std::nullopt;
    return Mat(re->cast<cplx>());
  }
  if (!j.is_object() || !j.contains("re")) {
    err.add(path + ": expected {\"re\": [[...]], \"im\": [[...]]} or a nested array");
    return std::nullopt;
  }
  auto re = read_real_matrix(j["re"], path + ".re", err);
  if (!re) return std::nullopt;
  RMat im = RMat::Zero(re->rows(), re->cols());
  if (j.contains("im")) {
    auto v = read_real_matrix(j["im"], path + ".im", err);
    if (!v) return std::nullopt;
    if (v->rows() != re->rows()) {
      err.add(path + ": re and im have different shapes");
      return std::nullopt;
    }
    im = *v;
  }
  Mat out(re->rows(), re->cols());
  out.real() = *re;
  out.imag() = im;
  return out;
}

json cvector_json(const Vec& v) {
  std::vector<double> re(v.size()), im(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    re[i] = v(i).real();
    im[i] = v(i).imag();
  }
  return {{"re", re}, {"im", im}};
}

json cmatrix_json(const Mat& m) {
  json re = json::array(), im = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> a(m.cols()), b(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      a[c] = m(r, c).real();
      b[c] = m(r, c).imag();
    }
    re.push_back(a);
    im.push_back(b);
  }
  return {{"re", re}, {"im", im}};
}

std::vector<double> rvec_std(const RVec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::optional<MatrixSpec> read_matrix_spec(const json& j, const std::string& path, Errors& err) {
  MatrixSpec s;
  if (j.is_string()) {
    s.builtin = j.get<std::string>();
    return s;
  }
  if (j.is_object() && j.contains("builtin")) {
    if (!j["builtin"].is_string()) {
      err.add(path + ".builtin: expected a string");
      return std::nullopt;
    }
    s.builtin = j["builtin"].get<std::string>();
    for (auto it = j.begin(); it != j.end(); ++it)
      if (it.key() != "builtin") s.params[it.key()] = it.value();
    return s;
  }
  auto m = read_cmatrix(j, path, err);
  if (!m) return std::nullopt;
  s.matrix = *m;
  return s;
}

json matrix_spec_json(const MatrixSpec& s) {
  if (s.builtin.empty()) return cmatrix_json(s.matrix);
  json j = s.params;
  j["builtin"] = s.builtin;
  return j;
}

// ---------------------------------------------------------------------------
// Operator construction shared by validation and simulation.

struct Context {
  const SimulationConfig& c;
  int dim;
};

int state_dimension(const SimulationConfig& c) {
  if (c.picture == Picture::wigner) return c.grid_N;
  if (is_hybrid(c.picture)) return c.fock_dim;
  return c.dimension;
}

double param(const MatrixSpec& s, const char* key, double def) {
  if (!s.params.contains(key)) return def;
  const json& v = s.params[key];
  if (!v.is_number()) throw std::invalid_argument(std::string("parameter '") + key + "' must be a number");
  return v.get<double>();
}

RVec param_vec(const MatrixSpec& s, const char* key, RVec def) {
  if (!s.params.contains(key)) return def;
  const json& v = s.params[key];
  if (!v.is_array()) throw std::invalid_argument(std::string("parameter '") + key + "' must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw std::invalid_argument(std::string("parameter '") + key + "' must hold numbers");
    out.push_back(e.get<double>());
  }
  return to_rvec(out);
}

Mat random_hermitian(int n, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Mat a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = cplx(nd(rng), nd(rng));
  return scale * hermitian_part(a);
}

void require_dim(int want, int got, const std::string& what) {
  if (want != got) {
    throw std::invalid_argument(what + " has dimension " + std::to_string(want) + " but the state has dimension " +
                                std::to_string(got));
  }
}

Mat fock_number(int d) {
  Mat n = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) n(k, k) = k;
  return n;
}

// Hermitian operator for the Hamiltonian, interaction or an observable.
Mat build_hermitian(const MatrixSpec& s, const Context& ctx, std::uint64_t salt) {
  const int d = ctx.dim;
  const double hb = ctx.c.hbar;
  if (s.builtin.empty()) {
    if (s.matrix.rows() != d) {
      throw std::invalid_argument("literal matrix has dimension " + std::to_string(s.matrix.rows()) +
                                  " but the state has dimension " + std::to_string(d));
    }
    if (!is_hermitian(s.matrix)) {
      throw std::invalid_argument("literal matrix is not Hermitian (defect " +
                                  std::to_string(hermitian_defect(s.matrix)) + ")");
    }
    return hermitian_part(s.matrix);
  }
  const std::string& b = s.builtin;
  if (b == "pauli_x" || b == "pauli_y" || b == "pauli_z") {
    require_dim(2, d, b);
    return b == "pauli_x" ? pauli_x() : b == "pauli_y" ? pauli_y() : pauli_z();
  }
  if (b == "pauli") {
    require_dim(2, d, "pauli");
    RVec c = param_vec(s, "coefficients", RVec::Zero(3));
    if (c.size() != 3) throw std::invalid_argument("pauli: coefficients must have 3 entries");
    return param(s, "identity", 0.0) * identity(2) + c(0) * pauli_x() + c(1) * pauli_y() + c(2) * pauli_z();
  }
  if (b == "spin_field") {
    require_dim(2, d, "spin_field");
    RVec axis = param_vec(s, "axis", (RVec(3) << 0, 0, 1).finished());
    if (axis.size() != 3 || axis.norm() == 0.0) throw std::invalid_argument("spin_field: axis must be a nonzero 3-vector");
    axis /= axis.norm();
    auto S = spin_half(hb);
    return param(s, "omega", 1.0) * (axis(0) * S[0] + axis(1) * S[1] + axis(2) * S[2]);
  }
  if (b == "number") return fock_number(d);
  if (b == "harmonic" || b == "position" || b == "momentum") {
    const double w = param(s, "omega", 1.0);
    if (ctx.c.picture == Picture::wigner) {
      PhaseSpaceGrid g(ctx.c.grid_N, ctx.c.grid_dx, hb);
      Mat q = position_operator(g).mat(), p = momentum_operator(g).mat();
      if (b == "position") return q;
      if (b == "momentum") return p;
      return hermitian_part(Mat(0.5 * (p * p + w * w * q * q)));
    }
    if (is_hybrid(ctx.c.picture)) {
      CanonicalOperators ops(d, 1, hb);
      if (b == "position") return ops.Q();
      if (b == "momentum") return ops.P();
      return hermitian_part(Mat(0.5 * (ops.P() * ops.P() + w * w * ops.Q() * ops.Q())));
    }
    if (b != "harmonic") throw std::invalid_argument(b + " requires the wigner or a hybrid picture");
    return hb * w * (fock_number(d) + 0.5 * identity(d));
  }
  if (b == "coupled_oscillators") {
    const int m = static_cast<int>(param(s, "fock", 0.0));
    if (m < 2 || m * m != d) {
      throw std::invalid_argument("coupled_oscillators: fock^2 must equal the dimension " + std::to_string(d));
    }
    Mat a = Mat::Zero(m, m);
    for (int k = 1; k < m; ++k) a(k - 1, k) = std::sqrt(double(k));
    Mat I = identity(m);
    Mat A = Eigen::kroneckerProduct(a, I);
    Mat B = Eigen::kroneckerProduct(I, a);
    const double w1 = param(s, "omega1", 1.0), w2 = param(s, "omega2", 1.0), g = param(s, "g", 0.1);
    Mat h = hb * (w1 * A.adjoint() * A + w2 * B.adjoint() * B + g * (A.adjoint() * B + A * B.adjoint()));
    return hermitian_part(h);
  }
  if (b == "random") {
    std::mt19937_64 rng(ctx.c.seed * 1000003ULL + salt);
    return random_hermitian(d, rng, param(s, "scale", 1.0));
  }
  if (b == "harmonic_coupling" || b == "phase_type") {
    throw std::invalid_argument(b + " is a classical-quantum Hamiltonian; use a hybrid picture");
  }
  throw std::invalid_argument("unknown builtin '" + b + "'");
}

struct InitialState {
  bool pure = true;
  Vec psi;
  Mat rho;
};

InitialState build_state(const StateSpec& s, const Context& ctx) {
  const int d = ctx.dim;
  InitialState out;
  if (s.kind == "basis") {
    if (s.index < 0 || s.index >= d) {
      throw std::invalid_argument("basis index " + std::to_string(s.index) + " out of range for dimension " +
                                  std::to_string(d));
    }
    out.psi = StateVector::basis(d, s.index).vec();
  } else if (s.kind == "vector") {
    if (s.vector.size() != d) {
      throw std::invalid_argument("vector has length " + std::to_string(s.vector.size()) + " but the dimension is " +
                                  std::to_string(d));
    }
    if (s.vector.norm() <= 1e-12) throw std::invalid_argument("vector must be nonzero");
    out.psi = s.vector / s.vector.norm();
  } else if (s.kind == "diagonal") {
    if (s.weights.size() != d) {
      throw std::invalid_argument("weights have length " + std::to_string(s.weights.size()) +
                                  " but the dimension is " + std::to_string(d));
    }
    DensityMatrix r = DensityMatrix::diagonal(s.weights);
    out.rho = r.mat();
    out.pure = r.is_pure();
    if (out.pure) {
      Eigen::Index k;
      s.weights.maxCoeff(&k);
      out.psi = StateVector::basis(d, static_cast<int>(k)).vec();
    }
  } else if (s.kind == "coherent") {
    if (s.center.size() != 2) throw std::invalid_argument("coherent center must have 2 entries (q, p)");
    if (ctx.c.picture == Picture::wigner) {
      PhaseSpaceGrid g(ctx.c.grid_N, ctx.c.grid_dx, ctx.c.hbar);
      out.psi = grid_coherent_state(g, s.center(0), s.center(1)).vec();
    } else if (is_hybrid(ctx.c.picture)) {
      CanonicalOperators ops(d, 1, ctx.c.hbar);
      out.psi = coherent_state(s.center, ops).vec();
    } else {
      throw std::invalid_argument("coherent states need the wigner or a hybrid picture");
    }
  } else {
    throw std::invalid_argument("unknown kind '" + s.kind + "' (basis, vector, diagonal, coherent)");
  }
  if (out.pure) out.rho = projector(out.psi);
  return out;
}

GaugeChoice build_gauge(const GaugeSpec& g, const Context& ctx) {
  const int d = ctx.dim;
  auto check = [&](const Mat& k, const std::string& what) {
    if (k.rows() != d || k.cols() != d) {
      throw std::invalid_argument(what + " has dimension " + std::to_string(k.rows()) + " but the state has dimension " +
                                  std::to_string(d));
    }
    if (!is_skew_hermitian(k)) {
      throw std::invalid_argument(what + " is not skew-Hermitian (defect " + std::to_string(skew_defect(k)) + ")");
    }
  };
  if (g.kind == "zero") return GaugeChoice::zero();
  if (g.kind == "constant") {
    check(g.values.at(0), "kappa");
    return GaugeChoice::constant(Operator::skew(g.values[0]));
  }
  if (g.kind == "piecewise") {
    std::vector<Operator> vals;
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      check(g.values[i], "values[" + std::to_string(i) + "]");
      vals.push_back(Operator::skew(g.values[i]));
    }
    return GaugeChoice::piecewise(g.breakpoints, std::move(vals));
  }
  if (g.kind == "random") {
    if (g.pieces < 1) throw std::invalid_argument("pieces must be positive");
    std::mt19937_64 rng(ctx.c.seed * 1000003ULL + 77);
    std::vector<double> bp;
    std::vector<Operator> vals;
    for (int i = 0; i < g.pieces; ++i) {
      bp.push_back(ctx.c.t0 + (ctx.c.t1 - ctx.c.t0) * i / g.pieces);
      vals.push_back(Operator::skew(Mat(I_UNIT * random_hermitian(d, rng, g.scale))));
    }
    return GaugeChoice::piecewise(bp, std::move(vals));
  }
  throw std::invalid_argument("unknown kind '" + g.kind + "' (zero, constant, piecewise, random)");
}

HybridHamiltonian build_hybrid_hamiltonian(const MatrixSpec& s, const Context& ctx, const CanonicalOperators& ops) {
  if (s.builtin == "harmonic_coupling") return harmonic_coupling(ops);
  if (s.builtin == "phase_type") return phase_type_oscillator(ops);
  return uncoupled(Operator::hermitian(build_hermitian(s, ctx, 1)), ops.n);
}

// Runs the builders and semantic checks, collecting every failure.
void validate(const SimulationConfig& c, Errors& err) {
  if (c.hbar <= 0.0) err.add("hbar: must be positive");
  if (c.steps < 1) err.add("time.steps: must be at least 1");
  if (!(c.t1 > c.t0)) err.add("time: t1 must exceed t0");
  if (c.picture == Picture::wigner) {
    if (c.grid_N < 2 || c.grid_N % 2 != 0) err.add("grid.N: must be even and at least 2");
    if (c.grid_dx <= 0.0) err.add("grid.dx: must be positive");
  } else if (is_hybrid(c.picture)) {
    if (c.fock_dim < 8) err.add("fock_dim: must be at least 8");
  } else if (c.dimension < 1) {
    err.add("dimension: must be positive");
  }
  if (!err.list.empty()) return;
  Context ctx{c, state_dimension(c)};

  const bool needs_h = c.picture != Picture::fs_geodesic;
  if (needs_h && !c.hamiltonian) err.add("hamiltonian: required for the " + to_string(c.picture) + " picture");
  if (c.hamiltonian) {
    try {
      if (is_hybrid(c.picture)) {
        CanonicalOperators ops(ctx.dim, 1, c.hbar);
        build_hybrid_hamiltonian(*c.hamiltonian, ctx, ops);
      } else {
        build_hermitian(*c.hamiltonian, ctx, 1);
      }
    } catch (const std::exception& e) {
      err.add(std::string("hamiltonian: ") + e.what() + " (initial/dimension = " + std::to_string(ctx.dim) + ")");
    }
  }
  if (c.picture == Picture::dirac) {
    if (!c.interaction) {
      err.add("interaction: required for the dirac picture");
    } else {
      try {
        build_hermitian(*c.interaction, ctx, 2);
      } catch (const std::exception& e) {
        err.add(std::string("interaction: ") + e.what());
      }
    }
  } else if (c.interaction) {
    err.add("interaction: only used by the dirac picture");
  }
  if (c.generator) {
    if (c.picture != Picture::schrodinger) {
      err.add("generator: only used by the schrodinger picture");
    } else if (!c.generator->builtin.empty()) {
      err.add("generator: must be a literal matrix");
    } else if (c.generator->matrix.rows() != ctx.dim) {
      err.add("generator: dimension " + std::to_string(c.generator->matrix.rows()) + " does not match initial (" +
              std::to_string(ctx.dim) + ")");
    } else if (!is_skew_hermitian(c.generator->matrix)) {
      err.add("generator: not skew-Hermitian (defect " + std::to_string(skew_defect(c.generator->matrix)) + ")");
    }
  }

  InitialState st;
  bool have_state = false;
  try {
    st = build_state(c.initial, ctx);
    have_state = true;
  } catch (const std::exception& e) {
    err.add(std::string("initial: ") + e.what());
  }
  if (have_state) {
    const bool pure_only = c.picture == Picture::schrodinger || c.picture == Picture::dirac ||
                           c.picture == Picture::fs_geodesic;
    if (pure_only && !st.pure) err.add("initial: the " + to_string(c.picture) + " picture needs a pure state");
  }
  if (c.picture == Picture::fs_geodesic) {
    if (!c.velocity) {
      err.add("velocity: required for the fs_geodesic picture");
    } else if (c.velocity->size() != ctx.dim) {
      err.add("velocity: length " + std::to_string(c.velocity->size()) + " does not match initial (dimension " +
              std::to_string(ctx.dim) + ")");
    }
  } else if (c.velocity) {
    err.add("velocity: only used by the fs_geodesic picture");
  }
  if (c.classical) {
    if (!is_hybrid(c.picture)) err.add("classical: only used by hybrid pictures");
    else if (c.classical->size() != 2) err.add("classical: must have 2 entries (q, p)");
  }

  const bool gauge_ok = c.picture == Picture::schrodinger || c.picture == Picture::heisenberg ||
                        c.picture == Picture::dirac;
  if (c.gauge.kind != "zero" && !gauge_ok) {
    err.add("gauge: only used by the schrodinger, heisenberg and dirac pictures");
  } else {
    try {
      GaugeChoice g = build_gauge(c.gauge, ctx);
      if (have_state && !st.pure && g.kappa) {
        // Mixed Heisenberg data needs [kappa, rho0] = 0 for every piece.
        for (std::size_t i = 0; i < std::max<std::size_t>(1, c.gauge.breakpoints.size()); ++i) {
          double t = c.gauge.breakpoints.empty() ? c.t0 : c.gauge.breakpoints[i];
          Mat k = g.at(t, ctx.dim);
          if (commutator(k, st.rho).norm() > 1e-10 * (1.0 + k.norm())) {
            err.add("gauge: kappa must commute with the mixed initial state");
            break;
          }
        }
      }
    } catch (const std::exception& e) {
      err.add(std::string("gauge: ") + e.what());
    }
  }

  for (const auto& [name, spec] : c.observables) {
    try {
      build_hermitian(spec, ctx, 3);
    } catch (const std::exception& e) {
      err.add("observables." + name + ": " + e.what());
    }
  }

  std::vector<std::string> known;
  for (const auto& r : default_tolerances(c.picture)) known.push_back(r.column);
  for (const auto& [col, tol] : c.tolerances) {
    if (std::find(known.begin(), known.end(), col) == known.end()) {
      std::string list;
      for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
      err.add("tolerances." + col + ": unknown column for " + to_string(c.picture) + " (valid: " + list + ")");
    } else if (!(tol > 0.0)) {
      err.add("tolerances." + col + ": must be positive");
    }
  }
  if (c.scheme != "composed_midpoint" && c.scheme != "midpoint_predictor") {
    err.add("scheme: must be composed_midpoint or midpoint_predictor");
  }
}

}  // namespace

// ---------------------------------------------------------------------------

SimulationConfig parse_config(const json& j) {
  Errors err;
  SimulationConfig c;
  if (!j.is_object()) throw ConfigError({"config: top level must be a JSON object"});

  static const std::vector<std::string> allowed = {
      "picture", "dimension", "fock_dim", "grid", "hbar", "time", "seed", "hamiltonian", "interaction",
      "generator", "initial", "velocity", "classical", "gauge", "observables", "tolerances", "scheme", "output"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      err.add(it.key() + ": unknown field");
    }
  }

  if (!j.contains("picture") || !j["picture"].is_string()) {
    err.add("picture: required string");
  } else {
    auto p = picture_from_string(j["picture"].get<std::string>());
    if (!p) {
      std::string list;
      for (const auto& n : picture_names()) list += (list.empty() ? "" : ", ") + n;
      err.add("picture: unknown value '" + j["picture"].get<std::string>() + "' (valid: " + list + ")");
    } else {
      c.picture = *p;
    }
  }
  auto read_int = [&](const json& v, const std::string& path, int& out) {
    if (!v.is_number_integer()) err.add(path + ": expected an integer");
    else out = v.get<int>();
  };
  if (j.contains("dimension")) read_int(j["dimension"], "dimension", c.dimension);
  if (j.contains("fock_dim")) read_int(j["fock_dim"], "fock_dim", c.fock_dim);
  if (j.contains("grid")) {
    const json& g = j["grid"];
    if (!g.is_object()) {
      err.add("grid: expected an object");
    } else {
      if (g.contains("N")) read_int(g["N"], "grid.N", c.grid_N);
      if (g.contains("dx"))
        if (auto v = read_number(g["dx"], "grid.dx", err)) c.grid_dx = *v;
    }
  }
  if (j.contains("hbar"))
    if (auto v = read_number(j["hbar"], "hbar", err)) c.hbar = *v;
  if (j.contains("time")) {
    const json& t = j["time"];
    if (!t.is_object()) {
      err.add("time: expected an object");
    } else {
      if (t.contains("t0"))
        if (auto v = read_number(t["t0"], "time.t0", err)) c.t0 = *v;
      if (t.contains("t1"))
        if (auto v = read_number(t["t1"], "time.t1", err)) c.t1 = *v;
      if (t.contains("steps")) read_int(t["steps"], "time.steps", c.steps);
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) err.add("seed: expected a non-negative integer");
    else c.seed = j["seed"].get<std::uint64_t>();
  }
  for (const char* key : {"hamiltonian", "interaction", "generator"}) {
    if (!j.contains(key)) continue;
    auto s = read_matrix_spec(j[key], key, err);
    if (!s) continue;
    if (std::string(key) == "hamiltonian") c.hamiltonian = s;
    else if (std::string(key) == "interaction") c.interaction = s;
    else c.generator = s;
  }
  if (!j.contains("initial")) {
    err.add("initial: required");
  } else {
    const json& s = j["initial"];
    if (!s.is_object() || !s.contains("kind") || !s["kind"].is_string()) {
      err.add("initial: expected an object with a string 'kind'");
    } else {
      c.initial.kind = s["kind"].get<std::string>();
      if (c.initial.kind == "basis") {
        if (s.contains("index")) read_int(s["index"], "initial.index", c.initial.index);
      } else if (c.initial.kind == "vector") {
        if (!s.contains("amplitudes")) err.add("initial.amplitudes: required for kind 'vector'");
        else if (auto v = read_cvector(s["amplitudes"], "initial.amplitudes", err)) c.initial.vector = *v;
      } else if (c.initial.kind == "diagonal") {
        if (!s.contains("weights")) err.add("initial.weights: required for kind 'diagonal'");
        else if (auto v = read_reals(s["weights"], "initial.weights", err)) c.initial.weights = to_rvec(*v);
      } else if (c.initial.kind == "coherent") {
        if (!s.contains("center")) err.add("initial.center: required for kind 'coherent'");
        else if (auto v = read_reals(s["center"], "initial.center", err)) c.initial.center = to_rvec(*v);
      } else {
        err.add("initial.kind: unknown value '" + c.initial.kind + "' (valid: basis, vector, diagonal, coherent)");
      }
    }
  }
  if (j.contains("velocity"))
    if (auto v = read_cvector(j["velocity"], "velocity", err)) c.velocity = *v;
  if (j.contains("classical"))
    if (auto v = read_reals(j["classical"], "classical", err)) c.classical = to_rvec(*v);
  if (j.contains("gauge")) {
    const json& g = j["gauge"];
    if (g.is_string()) {
      c.gauge.kind = g.get<std::string>();
    } else if (!g.is_object() || !g.contains("kind") || !g["kind"].is_string()) {
      err.add("gauge: expected \"zero\" or an object with a string 'kind'");
    } else {
      c.gauge.kind = g["kind"].get<std::string>();
      if (c.gauge.kind == "constant") {
        if (!g.contains("kappa")) err.add("gauge.kappa: required for kind 'constant'");
        else if (auto m = read_cmatrix(g["kappa"], "gauge.kappa", err)) c.gauge.values = {*m};
      } else if (c.gauge.kind == "piecewise") {
        if (auto b = g.contains("breakpoints") ? read_reals(g["breakpoints"], "gauge.breakpoints", err)
                                               : (err.add("gauge.breakpoints: required"), std::nullopt)) {
          c.gauge.breakpoints = *b;
        }
        if (!g.contains("values") || !g["values"].is_array()) {
          err.add("gauge.values: required array of matrices");
        } else {
          for (std::size_t i = 0; i < g["values"].size(); ++i)
            if (auto m = read_cmatrix(g["values"][i], "gauge.values[" + std::to_string(i) + "]", err))
              c.gauge.values.push_back(*m);
          if (c.gauge.values.size() != c.gauge.breakpoints.size()) {
            err.add("gauge: breakpoints and values must have the same length");
          }
        }
      } else if (c.gauge.kind == "random") {
        if (g.contains("pieces")) read_int(g["pieces"], "gauge.pieces", c.gauge.pieces);
        if (g.contains("scale"))
          if (auto v = read_number(g["scale"], "gauge.scale", err)) c.gauge.scale = *v;
      } else if (c.gauge.kind != "zero") {
        err.add("gauge.kind: unknown value '" + c.gauge.kind + "' (valid: zero, constant, piecewise, random)");
      }
    }
  }
  if (j.contains("observables")) {
    if (!j["observables"].is_object()) {
      err.add("observables: expected an object of name -> operator");
    } else {
      for (auto it = j["observables"].begin(); it != j["observables"].end(); ++it)
        if (auto s = read_matrix_spec(it.value(), "observables." + it.key(), err)) c.observables[it.key()] = *s;
    }
  }
  if (j.contains("tolerances")) {
    if (!j["tolerances"].is_object()) {
      err.add("tolerances: expected an object of column -> number");
    } else {
      for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it)
        if (auto v = read_number(it.value(), "tolerances." + it.key(), err)) c.tolerances[it.key()] = *v;
    }
  }
  if (j.contains("scheme")) {
    if (!j["scheme"].is_string()) err.add("scheme: expected a string");
    else c.scheme = j["scheme"].get<std::string>();
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    if (!o.is_object()) {
      err.add("output: expected an object");
    } else {
      if (o.contains("dir")) {
        if (!o["dir"].is_string()) err.add("output.dir: expected a string");
        else c.output_dir = o["dir"].get<std::string>();
      }
      if (o.contains("pgm")) {
        if (!o["pgm"].is_boolean()) err.add("output.pgm: expected a boolean");
        else c.pgm = o["pgm"].get<bool>();
      }
    }
  }
  if (c.observables.empty() && c.dimension == 2 && !is_hybrid(c.picture) && c.picture != Picture::wigner &&
      c.picture != Picture::fs_geodesic) {
    c.observables["sigma_x"] = MatrixSpec{"pauli_x", json::object(), {}};
    c.observables["sigma_y"] = MatrixSpec{"pauli_y", json::object(), {}};
    c.observables["sigma_z"] = MatrixSpec{"pauli_z", json::object(), {}};
  }

  if (err.list.empty()) validate(c, err);
  if (!err.list.empty()) throw ConfigError(err.list);
  return c;
}

SimulationConfig load_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError({path.string() + ": parse error at byte " + std::to_string(e.byte) + ": " + e.what()});
  }
  return parse_config(j);
}

json to_json(const SimulationConfig& c) {
  json j;
  j["picture"] = to_string(c.picture);
  j["dimension"] = c.dimension;
  j["fock_dim"] = c.fock_dim;
  j["grid"] = {{"N", c.grid_N}, {"dx", c.grid_dx}};
  j["hbar"] = c.hbar;
  j["time"] = {{"t0", c.t0}, {"t1", c.t1}, {"steps", c.steps}};
  j["seed"] = c.seed;
  if (c.hamiltonian) j["hamiltonian"] = matrix_spec_json(*c.hamiltonian);
  if (c.interaction) j["interaction"] = matrix_spec_json(*c.interaction);
  if (c.generator) j["generator"] = matrix_spec_json(*c.generator);
  json init = {{"kind", c.initial.kind}};
  if (c.initial.kind == "basis") init["index"] = c.initial.index;
  if (c.initial.kind == "vector") init["amplitudes"] = cvector_json(c.initial.vector);
  if (c.initial.kind == "diagonal") init["weights"] = rvec_std(c.initial.weights);
  if (c.initial.kind == "coherent") init["center"] = rvec_std(c.initial.center);
  j["initial"] = init;
  if (c.velocity) j["velocity"] = cvector_json(*c.velocity);
  if (c.classical) j["classical"] = rvec_std(*c.classical);
  json g = {{"kind", c.gauge.kind}};
  if (c.gauge.kind == "constant") g["kappa"] = cmatrix_json(c.gauge.values.at(0));
  if (c.gauge.kind == "piecewise") {
    g["breakpoints"] = c.gauge.breakpoints;
    g["values"] = json::array();
    for (const auto& v : c.gauge.values) g["values"].push_back(cmatrix_json(v));
  }
  if (c.gauge.kind == "random") {
    g["pieces"] = c.gauge.pieces;
    g["scale"] = c.gauge.scale;
  }
  j["gauge"] = g;
  j["observables"] = json::object();
  for (const auto& [k, v] : c.observables) j["observables"][k] = matrix_spec_json(v);
  j["tolerances"] = json::object();
  for (const auto& [k, v] : c.tolerances) j["tolerances"][k] = v;
  j["scheme"] = c.scheme;
  j["output"] = {{"dir", c.output_dir}, {"pgm", c.pgm}};
  return j;
}

// ---------------------------------------------------------------------------
// Default invariant thresholds per picture.

const std::vector<InvariantRule>& default_tolerances(Picture p) {
  static const std::map<Picture, std::vector<InvariantRule>> table = {
      {Picture::schrodinger,
       {{"norm_defect", "max", 1e-10},
        {"unitarity_defect", "max", 1e-10},
        {"energy", "drift", 1e-8},
        {"j1_norm", "max", 1e-10},
        {"j2", "drift", 1e-9}}},
      {Picture::von_neumann,
       {{"trace", "drift", 1e-9}, {"purity", "drift", 1e-9}, {"trace_rho3", "drift", 1e-9}, {"energy", "drift", 1e-8}}},
      {Picture::heisenberg,
       {{"energy", "drift", 1e-9}, {"spectrum_drift", "max", 1e-10}, {"unitarity_defect", "max", 1e-10}}},
      {Picture::dirac,
       {{"total_energy", "drift", 1e-8},
        {"free_energy", "drift", 1e-8},
        {"purity_defect", "max", 1e-9},
        {"unitarity_defect", "max", 1e-10}}},
      {Picture::wigner, {{"normalization", "target", 1e-8, 1.0}}},
      {Picture::fs_geodesic,
       {{"norm_defect", "max", 1e-10},
        {"horizontality", "max", 1e-8},
        {"conserved_drift", "max", 1e-7},
        {"lagrangian", "drift", 1e-7}}},
      {Picture::mean_field, {{"energy", "drift", 1e-8}, {"purity_defect", "max", 1e-8}}},
      {Picture::ehrenfest_extended,
       {{"energy", "drift", 1e-8}, {"purity_defect", "max", 1e-8}, {"c0", "drift", 1e-6}, {"c1", "drift", 1e-6}}},
  };
  return table.at(p);
}

// ---------------------------------------------------------------------------
// Tables.

void Table::write_csv(std::ostream& os) const {
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\r\n";
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_double(r[i]);
    os << "\r\n";
  }
}

Table Table::read_csv(std::istream& is) {
  Table t;
  std::string line;
  auto split = [](const std::string& l) {
    std::vector<std::string> out;
    std::stringstream ss(l);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!l.empty() && l.back() == ',') out.emplace_back();
    return out;
  };
  auto chomp = [](std::string& l) {
    if (!l.empty() && l.back() == '\r') l.pop_back();
  };
  if (!std::getline(is, line)) throw std::runtime_error("malformed CSV: missing header");
  chomp(line);
  t.columns = split(line);
  if (t.columns.empty() || t.columns.front().empty()) throw std::runtime_error("malformed CSV: empty header");
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    chomp(line);
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != t.columns.size()) {
      throw std::runtime_error("malformed CSV: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                               " fields, expected " + std::to_string(t.columns.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used == 0 || used != c.size()) {
        throw std::runtime_error("malformed CSV: line " + std::to_string(lineno) + ": '" + c + "' is not a number");
      }
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

int Table::column(const std::string& name) const {
  auto it = std::find(columns.begin(), columns.end(), name);
  return it == columns.end() ? -1 : static_cast<int>(it - columns.begin());
}

// ---------------------------------------------------------------------------
// Simulation.

namespace {

void add_operator_columns(std::vector<std::string>& cols, int n, const std::string& prefix) {
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      cols.push_back("re_" + prefix + std::to_string(i) + "_" + std::to_string(j));
      cols.push_back("im_" + prefix + std::to_string(i) + "_" + std::to_string(j));
    }
}

void push_operator(std::vector<double>& row, const Mat& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      row.push_back(m(i, j).real());
      row.push_back(m(i, j).imag());
    }
}

void add_vector_columns(std::vector<std::string>& cols, int n, const std::string& prefix) {
  for (int i = 0; i < n; ++i) {
    cols.push_back("re_" + prefix + std::to_string(i));
    cols.push_back("im_" + prefix + std::to_string(i));
  }
}

void push_vector(std::vector<double>& row, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    row.push_back(v(i).real());
    row.push_back(v(i).imag());
  }
}

struct Observables {
  std::vector<std::string> names;
  std::vector<Mat> ops;
};

Observables build_observables(const SimulationConfig& c, const Context& ctx) {
  Observables o;
  for (const auto& [name, spec] : c.observables) {
    o.names.push_back(name);
    o.ops.push_back(build_hermitian(spec, ctx, 3));
  }
  return o;
}

TimeGrid time_grid(const SimulationConfig& c) { return TimeGrid{c.t0, c.t1, c.steps}; }

void sim_schrodinger(const SimulationConfig& c, const Context& ctx, RunResult& r) {
  const int d = ctx.dim;
  Operator H = Operator::hermitian(build_hermitian(*c.hamiltonian, ctx, 1));
  InitialState st = build_state(c.initial, ctx);
  GaugeChoice gauge = build_gauge(c.gauge, ctx);
  Observables obs = build_observables(c, ctx);
  TimeGrid grid = time_grid(c);
  Trajectory<Operator> U;
  std::vector<Vec> psi;
  if (c.generator) {
    Operator xi = Operator::skew(c.generator->matrix);
    U = integrate_propagator([xi](double) { return xi; }, Side::left, Operator::identity(d), grid);
    for (const auto& u : U.values) psi.push_back(u.mat() * st.psi);
  } else {
    SchrodingerRun run = solve_schrodinger_full(constant_hamiltonian(H), StateVector(st.psi), gauge, grid, c.hbar);
    U = std::move(run.propagator);
    for (const auto& s : run.states.values) psi.push_back(s.vec());
  }
  DensityMatrix rho0 = project_pure(StateVector(st.psi));
  r.trajectory.columns = {"t"};
  add_vector_columns(r.trajectory.columns, d, "psi");
  for (const auto& n : obs.names) r.trajectory.columns.push_back(n);
  r.invariants.columns = {"t", "norm_defect", "unitarity_defect", "energy", "j1_norm", "j2"};
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const double t = U.times[k];
    std::vector<double> row{t};
    push_vector(row, psi[k]);
    for (const auto& a : obs.ops) row.push_back(psi[k].dot(a * psi[k]).real());
    r.trajectory.rows.push_back(std::move(row));
    // The DF momentum is -i hbar psi psi^dagger; J1 and J2 follow from the cotangent lift at U.
    Operator mu = momentum_map_pure(StateVector(psi[k]), c.hbar);
    CotangentPoint pt(Operator(U.values[k].mat(), Character::unitary), mu);
    r.invariants.rows.push_back({t, std::abs(psi[k].norm() - 1.0), unitary_defect(U.values[k].mat()),
                                 psi[k].dot(H.mat() * psi[k]).real(), j1(pt, rho0).mat().norm(), j2(pt, rho0)});
  }
}

void sim_von_neumann(const SimulationConfig& c, const Context& ctx, RunResult& r) {
  Operator H = Operator::hermitian(build_hermitian(*c.hamiltonian, ctx, 1));
  InitialState st = build_state(c.initial, ctx);
  Observables obs = build_observables(c, ctx);
  auto traj = solve_von_neumann(constant_hamiltonian(H), DensityMatrix(st.rho), time_grid(c), c.hbar);
  r.trajectory.columns = {"t"};
  add_operator_columns(r.trajectory.columns, ctx.dim, "rho");
  for (const auto& n : obs.names) r.trajectory.columns.push_back(n);
  r.invariants.columns = {"t", "trace", "purity", "trace_rho3", "energy"};
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const Mat& rho = traj.values[k].mat();
    std::vector<double> row{traj.times[k]};
    push_operator(row, rho);
    for (const auto& a : obs.ops) row.push_back(pairing(rho, a));
    r.trajectory.rows.push_back(std::move(row));
    Mat r2 = rho * rho;
    r.invariants.rows.push_back({traj.times[k], rho.trace().real(), r2.trace().real(), (r2 * rho).trace().real(),
                                 pairing(rho, H.mat())});
  }
}

void sim_heisenberg(const SimulationConfig& c, const Context& ctx, RunResult& r) {
  Operator H = Operator::hermitian(build_hermitian(*c.hamiltonian, ctx, 1));
  InitialState st = build_state(c.initial, ctx);
  GaugeChoice gauge = build_gauge(c.gauge, ctx);
  Observables obs = build_observables(c, ctx);
  TimeGrid grid = time_grid(c);
  DensityMatrix rho0(st.rho);
  HeisenbergSystem sys = st.pure ? HeisenbergSystem::pure(H, rho0, gauge.kappa, c.hbar)
                                 : HeisenbergSystem::mixed(H, rho0, gauge.kappa, c.hbar);
  auto hh = evolve_heisenberg(sys, grid);
  auto U = propagator_from_heisenberg(sys, Operator::identity(ctx.dim), grid);
  std::vector<Trajectory<Operator>> ah;
  for (const auto& a : obs.ops) ah.push_back(evolve_observable(Operator::hermitian(a), sys, grid));
  r.trajectory.columns = {"t"};
  add_operator_columns(r.trajectory.columns, ctx.dim, "H");
  for (const auto& n : obs.names) r.trajectory.columns.push_back(n);
  r.invariants.columns = {"t", "energy", "spectrum_drift", "unitarity_defect"};
  const RVec spec0 = hermitian_spectrum(H.mat());
  const double scale = std::max(1.0, spec0.cwiseAbs().maxCoeff());
  for (std::size_t k = 0; k < hh.size(); ++k) {
    const Mat& m = hh.values[k].mat();
    std::vector<double> row{hh.times[k]};
    push_operator(row, m);
    for (const auto& a : ah) row.push_back(pairing(rho0.mat(), a.values[k].mat()));
    r.trajectory.rows.push_back(std::move(row));
    double sd = (hermitian_spectrum(m) - spec0).cwiseAbs().maxCoeff() / scale;
    r.invariants.rows.push_back({hh.times[k], pairing(rho0.mat(), m), sd, unitary_defect(U.values[k].mat())});
  }
}

void sim_dirac(const SimulationConfig& c, const Context& ctx, RunResult& r) {
  Operator H0 = Operator::hermitian(build_hermitian(*c.hamiltonian, ctx, 1));
  Operator H1 = Operator::hermitian(build_hermitian(*c.interaction, ctx, 2));
  InitialState st = build_state(c.initial, ctx);
  GaugeChoice gauge = build_gauge(c.gauge, ctx);
  DensityMatrix rho0(st.rho);
  DiracSystem sys(H0, H1, rho0, rho0, gauge.kappa, c.hbar);
  DiracRun run = dirac_flow_full(sys, time_grid(c));
  r.trajectory.columns = {"t"};
  add_operator_columns(r.trajectory.columns, ctx.dim, "rho");
  r.invariants.columns = {"t", "total_energy", "free_energy", "purity_defect", "unitarity_defect"};
  for (std::size_t k = 0; k < run.states.size(); ++k) {
    const DiracSystem& s = run.states.values[k];
    std::vector<double> row{run.states.times[k]};
    push_operator(row, s.rhoI.mat());
    r.trajectory.rows.push_back(std::move(row));
    r.invariants.rows.push_back({run.states.times[k], s.total_energy(), s.free_energy(), s.rhoI.pure_defect(),
                                 unitary_defect(run.U0.values[k].mat())});
  }
}

void sim_wigner(const SimulationConfig& c, const Context& ctx, RunResult& r, std::vector<WignerFunction>* frames) {
  PhaseSpaceGrid g(c.grid_N, c.grid_dx, c.hbar);
  Operator H = Operator::hermitian(build_hermitian(*c.hamiltonian, ctx, 1));
  InitialState st = build_state(c.initial, ctx);
  WignerFunction w0 = wigner_transform(Operator::hermitian(st.rho), g);
  auto traj = evolve_wigner(H, w0, time_grid(c));
  r.trajectory.columns = {"t", "mean_x", "mean_p", "w_min", "w_max"};
  r.invariants.columns = {"t", "normalization"};
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const WignerFunction& w = traj.values[k];
    const double t = traj.times[k];
    r.trajectory.rows.push_back({t, w.mean_x(), w.mean_p(), w.values.minCoeff(), w.values.maxCoeff()});
    r.invariants.rows.push_back({t, w.integral()});
  }
  if (frames) *frames = {traj.front(), traj.back()};
}

void sim_fs(const SimulationConfig& c, const Context& ctx, RunResult& r) {
  InitialState st = build_state(c.initial, ctx);
  GeodesicState s0(StateVector(st.psi), *c.velocity);
  auto traj = fs_geodesic(s0, time_grid(c));
  const Mat m0 = fs_conserved(s0).mat();
  r.trajectory.columns = {"t"};
  add_vector_columns(r.trajectory.columns, ctx.dim, "psi");
  r.invariants.columns = {"t", "norm_defect", "horizontality", "conserved_drift", "lagrangian"};
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const GeodesicState& g = traj.values[k];
    std::vector<double> row{traj.times[k]};
    push_vector(row, g.psi.vec());
    r.trajectory.rows.push_back(std::move(row));
    r.invariants.rows.push_back({traj.times[k], std::abs(g.psi.norm() - 1.0), std::abs(fs_connection(g)),
                                 (fs_conserved(g).mat() - m0).norm(), fs_lagrangian(g, c.hbar)});
  }
  for (const auto& w : traj.warnings) r.message += "warning: " + w + "\n";
}

void sim_hybrid(const SimulationConfig& c, const Context& ctx, RunResult& r) {
  CanonicalOperators ops(ctx.dim, 1, c.hbar);
  HybridHamiltonian H = build_hybrid_hamiltonian(*c.hamiltonian, ctx, ops);
  InitialState st = build_state(c.initial, ctx);
  RVec z0 = c.classical ? *c.classical : expectation_Z(st.rho, ops);
  HybridState s0(z0, DensityMatrix(st.rho));
  HybridOptions opt;
  opt.flow = c.picture == Picture::mean_field ? HybridFlow::mean_field : HybridFlow::extended;
  opt.scheme = c.scheme == "midpoint_predictor" ? HybridScheme::midpoint_predictor : HybridScheme::composed_midpoint;
  opt.hbar = c.hbar;
  auto traj = integrate_hybrid(s0, H, ops, time_grid(c), opt);
  r.trajectory.columns = {"t", "z0", "z1", "Q", "P", "energy", "purity"};
  r.invariants.columns = {"t", "energy", "purity_defect", "c0", "c1"};
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const HybridState& s = traj.values[k];
    const double t = traj.times[k];
    RVec ez = expectation_Z(s.rho.mat(), ops);
    const double e = hybrid_energy(s, H);
    r.trajectory.rows.push_back({t, s.z(0), s.z(1), ez(0), ez(1), e, s.rho.purity()});
    r.invariants.rows.push_back({t, e, s.rho.pure_defect(), s.z(0) - ez(0), s.z(1) - ez(1)});
  }
  for (const auto& w : traj.warnings) r.message += "warning: " + w + "\n";
}

std::vector<InvariantRule> effective_rules(const SimulationConfig& c, double scale) {
  std::vector<InvariantRule> rules = default_tolerances(c.picture);
  for (auto& rule : rules) {
    auto it = c.tolerances.find(rule.column);
    if (it != c.tolerances.end()) rule.tol = it->second;
    rule.tol *= scale;
  }
  return rules;
}

// Returns an empty string when every rule holds, else a description of the first violation.
std::string check_invariants(const Table& t, const std::vector<InvariantRule>& rules) {
  if (t.rows.empty()) return "";
  for (std::size_t k = 0; k < t.rows.size(); ++k) {
    for (const auto& rule : rules) {
      const int col = t.column(rule.column);
      if (col < 0) continue;
      const double v = t.rows[k][col];
      double dev = 0.0;
      if (rule.mode == "max") dev = std::abs(v);
      else if (rule.mode == "drift") dev = std::abs(v - t.rows.front()[col]);
      else dev = std::abs(v - rule.target);
      if (!(dev <= rule.tol)) {
        std::ostringstream os;
        os << "invariant violation: " << rule.column << " (" << rule.mode << ", tolerance " << format_double(rule.tol)
           << ") deviates by " << format_double(dev) << " at row " << k << ":\n";
        for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
        os << "\n";
        for (std::size_t i = 0; i < t.rows[k].size(); ++i) os << (i ? "," : "") << format_double(t.rows[k][i]);
        return os.str();
      }
    }
  }
  return "";
}

RunResult simulate_impl(const SimulationConfig& cfg, const RunOptions& opt, std::vector<WignerFunction>* frames) {
  SimulationConfig c = cfg;
  if (opt.seed) c.seed = *opt.seed;
  Context ctx{c, state_dimension(c)};
  RunResult r;
  r.output_dir = resolve_output_dir(c, opt);
  switch (c.picture) {
    case Picture::schrodinger: sim_schrodinger(c, ctx, r); break;
    case Picture::von_neumann: sim_von_neumann(c, ctx, r); break;
    case Picture::heisenberg: sim_heisenberg(c, ctx, r); break;
    case Picture::dirac: sim_dirac(c, ctx, r); break;
    case Picture::wigner: sim_wigner(c, ctx, r, frames); break;
    case Picture::fs_geodesic: sim_fs(c, ctx, r); break;
    case Picture::mean_field:
    case Picture::ehrenfest_extended: sim_hybrid(c, ctx, r); break;
  }
  std::string v = check_invariants(r.invariants, effective_rules(c, opt.tolerance_scale));
  if (!v.empty()) {
    r.exit_code = kExitViolation;
    r.message += v;
  }
  return r;
}

void write_file(const fs::path& p, const std::function<void(std::ostream&)>& f) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  f(os);
  if (!os) throw std::runtime_error("error writing " + p.string());
}

}  // namespace

fs::path resolve_output_dir(const SimulationConfig& c, const RunOptions& opt) {
  if (opt.output_dir) return *opt.output_dir;
  if (const char* env = std::getenv("QGEOM_OUTPUT_DIR"); env && *env) return env;
  return c.output_dir;
}

RunResult simulate(const SimulationConfig& c, const RunOptions& opt) { return simulate_impl(c, opt, nullptr); }

RunResult run(const SimulationConfig& c, const RunOptions& opt) {
  std::vector<WignerFunction> frames;
  RunResult r = simulate_impl(c, opt, &frames);
  fs::create_directories(r.output_dir);
  write_file(r.output_dir / "trajectory.csv", [&](std::ostream& os) { r.trajectory.write_csv(os); });
  write_file(r.output_dir / "invariants.csv", [&](std::ostream& os) { r.invariants.write_csv(os); });
  SimulationConfig echo = c;
  if (opt.seed) echo.seed = *opt.seed;
  write_file(r.output_dir / "config.json", [&](std::ostream& os) { os << to_json(echo).dump(2) << "\n"; });
  if (!frames.empty()) {
    write_file(r.output_dir / "wigner_initial.csv", [&](std::ostream& os) { write_wigner_csv(os, frames.front()); });
    write_file(r.output_dir / "wigner_final.csv", [&](std::ostream& os) { write_wigner_csv(os, frames.back()); });
    if (c.pgm) {
      write_file(r.output_dir / "wigner_initial.pgm", [&](std::ostream& os) { write_wigner_pgm(os, frames.front()); });
      write_file(r.output_dir / "wigner_final.pgm", [&](std::ostream& os) { write_wigner_pgm(os, frames.back()); });
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reports.

std::vector<ColumnSummary> summarize(const Table& t) {
  if (t.rows.empty()) throw std::runtime_error("zero-length trajectory: no data rows");
  std::vector<ColumnSummary> out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (t.columns[i] == "t") continue;
    ColumnSummary s{t.columns[i], t.rows.front()[i], t.rows.front()[i], t.rows.front()[i], t.rows.back()[i], 0.0};
    for (const auto& r : t.rows) {
      s.min = std::min(s.min, r[i]);
      s.max = std::max(s.max, r[i]);
    }
    s.drift = s.max - s.min;
    out.push_back(s);
  }
  return out;
}

json report(const fs::path& dir, std::ostream& out) {
  const fs::path file = dir / "invariants.csv";
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error(file.string() + ": cannot open");
  Table t;
  try {
    t = Table::read_csv(in);
  } catch (const std::exception& e) {
    throw std::runtime_error(file.string() + ": " + e.what());
  }
  if (t.rows.empty()) throw std::runtime_error(file.string() + ": zero-length trajectory");
  auto sums = summarize(t);
  json j;
  j["file"] = file.string();
  j["rows"] = t.rows.size();
  j["columns"] = json::object();
  out << "invariants: " << file.string() << " (" << t.rows.size() << " rows)\n";
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-20s %24s %24s %24s\n", "column", "min", "max", "drift");
  out << buf;
  for (const auto& s : sums) {
    std::snprintf(buf, sizeof buf, "%-20s %24.17g %24.17g %24.17g\n", s.column.c_str(), s.min, s.max, s.drift);
    out << buf;
    j["columns"][s.column] = {{"min", s.min}, {"max", s.max}, {"first", s.first}, {"last", s.last}, {"drift", s.drift}};
  }
  write_file(dir / "report.json", [&](std::ostream& os) { os << j.dump(2) << "\n"; });
  return j;
}

}  // namespace qgeom
