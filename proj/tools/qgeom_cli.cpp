#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "qgeom/cli_io.hpp"

namespace {

struct Flags {
  double tolerance_scale = 1.0;
  std::string output;
  std::int64_t seed = -1;
  int jobs = 0;
};

qgeom::RunOptions options_from(const Flags& f) {
  qgeom::RunOptions o;
  o.tolerance_scale = f.tolerance_scale;
  if (!f.output.empty()) o.output_dir = f.output;
  if (f.seed >= 0) o.seed = static_cast<std::uint64_t>(f.seed);
  return o;
}

// Returns the process exit code and writes diagnostics to err.
int simulate_one(const std::string& path, const qgeom::RunOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    qgeom::SimulationConfig cfg = qgeom::load_config(path);
    qgeom::RunResult r = qgeom::run(cfg, opt);
    if (!r.message.empty()) err << r.message << (r.message.back() == '\n' ? "" : "\n");
    out << path << ": " << (r.exit_code == qgeom::kExitOk ? "ok" : "invariant violation") << " -> "
        << r.output_dir.string() << "\n";
    return r.exit_code;
  } catch (const qgeom::ConfigError& e) {
    err << path << ": " << e.what() << "\n";
    return qgeom::kExitConfig;
  } catch (const std::exception& e) {
    err << path << ": error: " << e.what() << "\n";
    return qgeom::kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Geometric quantum dynamics simulator"};
  app.require_subcommand(1);
  Flags flags;
  app.add_option("--tolerance-scale", flags.tolerance_scale, "Multiply every invariant tolerance")
      ->check(CLI::PositiveNumber);
  app.add_option("--output", flags.output, "Output directory (overrides QGEOM_OUTPUT_DIR and the config)");
  app.add_option("--seed", flags.seed, "Seed for builtin random operators and gauges")->check(CLI::NonNegativeNumber);

  std::string config;
  auto* sim = app.add_subcommand("simulate", "Run one configuration");
  sim->add_option("config", config, "Configuration JSON")->required();

  std::string dir;
  auto* rep = app.add_subcommand("report", "Summarize invariants.csv in a run directory");
  rep->add_option("dir", dir, "Run directory")->required();

  std::vector<std::string> configs;
  auto* batch = app.add_subcommand("batch", "Run several configurations, each in <output>/<config stem>");
  batch->add_option("configs", configs, "Configuration files")->required();
  batch->add_option("-j,--jobs", flags.jobs, "Parallel runs (default: hardware threads)");

  CLI11_PARSE(app, argc, argv);

  if (sim->parsed()) return simulate_one(config, options_from(flags), std::cout, std::cerr);

  if (rep->parsed()) {
    try {
      qgeom::report(dir, std::cout);
      return qgeom::kExitOk;
    } catch (const std::exception& e) {
      std::cerr << "report: " << e.what() << "\n";
      return qgeom::kExitRuntime;
    }
  }

  // batch
  const std::filesystem::path root = [&]() -> std::filesystem::path {
    if (!flags.output.empty()) return flags.output;
    if (const char* env = std::getenv("QGEOM_OUTPUT_DIR"); env && *env) return env;
    return "out";
  }();
  std::vector<int> codes(configs.size(), 0);
  std::vector<std::string> logs(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next++) < configs.size();) {
      qgeom::RunOptions opt = options_from(flags);
      opt.output_dir = root / std::filesystem::path(configs[i]).stem();
      std::ostringstream out;
      codes[i] = simulate_one(configs[i], opt, out, out);
      logs[i] = out.str();
    }
  };
  unsigned n = flags.jobs > 0 ? static_cast<unsigned>(flags.jobs) : std::max(1u, std::thread::hardware_concurrency());
  n = std::min<unsigned>(n, static_cast<unsigned>(configs.size()));
  std::vector<std::thread> pool;
  for (unsigned k = 0; k < n; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  int worst = qgeom::kExitOk;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::cout << logs[i];
    worst = std::max(worst, codes[i]);
  }
  return worst;
}
