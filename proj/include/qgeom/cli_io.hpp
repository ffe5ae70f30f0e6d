#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "qgeom/hilbert_core.hpp"

namespace qgeom {

enum class Picture { schrodinger, von_neumann, heisenberg, dirac, wigner, fs_geodesic, mean_field, ehrenfest_extended };

std::string to_string(Picture p);
std::optional<Picture> picture_from_string(const std::string& s);
const std::vector<std::string>& picture_names();

// Either a named builtin with parameters or a literal matrix.
struct MatrixSpec {
  std::string builtin;   // empty for a literal matrix
  nlohmann::json params = nlohmann::json::object();
  Mat matrix;            // literal entries
};

struct StateSpec {
  std::string kind = "basis";  // basis | vector | diagonal | coherent
  int index = 0;
  Vec vector;
  RVec weights;
  RVec center;  // coherent-state center (q, p)
};

struct GaugeSpec {
  std::string kind = "zero";  // zero | constant | piecewise | random
  std::vector<double> breakpoints;
  std::vector<Mat> values;
  int pieces = 3;
  double scale = 1.0;
};

struct SimulationConfig {
  Picture picture = Picture::schrodinger;
  int dimension = 2;
  int fock_dim = 32;
  int grid_N = 64;
  double grid_dx = 0.35;
  double hbar = 1.0;
  double t0 = 0.0;
  double t1 = 1.0;
  int steps = 100;
  std::uint64_t seed = 0;

  std::optional<MatrixSpec> hamiltonian;
  std::optional<MatrixSpec> interaction;  // H1 for the Dirac picture
  std::optional<MatrixSpec> generator;    // literal override of the Schrodinger generator
  StateSpec initial;
  std::optional<Vec> velocity;            // fs_geodesic
  std::optional<RVec> classical;          // hybrid z0, defaults to <Z>
  GaugeSpec gauge;
  std::map<std::string, MatrixSpec> observables;
  std::map<std::string, double> tolerances;
  std::string scheme = "composed_midpoint";

  std::string output_dir = "out";
  bool pgm = true;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

SimulationConfig parse_config(const nlohmann::json& j);
SimulationConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const SimulationConfig& c);

// Invariant thresholds: "max" bounds |value|, "drift" bounds |value - value(t0)|,
// "target" bounds |value - target|.
struct InvariantRule {
  std::string column;
  std::string mode;
  double tol;
  double target = 0.0;
};

const std::vector<InvariantRule>& default_tolerances(Picture p);

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  void write_csv(std::ostream& os) const;
  static Table read_csv(std::istream& is);
  int column(const std::string& name) const;  // -1 if absent
};

struct RunOptions {
  double tolerance_scale = 1.0;
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 invariant violation
  std::string message;
  std::filesystem::path output_dir;
  Table trajectory;
  Table invariants;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitViolation = 2;
inline constexpr int kExitConfig = 3;

// Resolve the output directory: option, then QGEOM_OUTPUT_DIR, then the config.
std::filesystem::path resolve_output_dir(const SimulationConfig& c, const RunOptions& opt);

// Computes the trajectory and invariant tables without touching the file system.
RunResult simulate(const SimulationConfig& c, const RunOptions& opt = {});
// simulate, then write trajectory.csv, invariants.csv, config.json and picture extras.
RunResult run(const SimulationConfig& c, const RunOptions& opt = {});

struct ColumnSummary {
  std::string column;
  double min = 0.0;
  double max = 0.0;
  double first = 0.0;
  double last = 0.0;
  double drift = 0.0;  // max - min
};

std::vector<ColumnSummary> summarize(const Table& t);
// Reads dir/invariants.csv, prints the summary and writes dir/report.json.
nlohmann::json report(const std::filesystem::path& dir, std::ostream& out);

}  // namespace qgeom
