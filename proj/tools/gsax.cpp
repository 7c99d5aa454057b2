#include "gsax/benchmarks.hpp"
#include "gsax/harness.hpp"
#include "gsax/marginal.hpp"
#include "gsax/trace_io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <utility>
#include <vector>

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 3;

std::size_t default_jobs() {
  if (const char* env = std::getenv("GSAX_JOBS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "gsax: ignoring invalid GSAX_JOBS='" << env << "'\n";
  }
  return 1;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gsax::UsageError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct RunFlags {
  std::string config_file;
  // (setting key, flag value) for every flag, applied only when given.
  std::vector<std::pair<std::string, std::string>> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;
  bool paired = false;
  bool converge = false;
  CLI::Option* paired_opt = nullptr;
  CLI::Option* converge_opt = nullptr;
};

void add_setting(CLI::App* app, RunFlags& flags, const std::string& flag, const std::string& key,
                 const std::string& help) {
  flags.values.emplace_back(key, std::string());
  // Stable storage: reserve happens before any option is added.
  flags.options.emplace_back(key, app->add_option(flag, flags.values.back().second, help));
}

int run_command(RunFlags& flags) {
  gsax::StudyConfig config;
  config.jobs = default_jobs();
  if (!flags.config_file.empty()) gsax::apply_config_text(config, read_text(flags.config_file));
  for (std::size_t i = 0; i < flags.options.size(); ++i) {
    if (flags.options[i].second->count() > 0) {
      gsax::apply_setting(config, flags.values[i].first, flags.values[i].second);
    }
  }
  if (flags.paired_opt->count() > 0) config.paired = true;
  if (flags.converge_opt->count() > 0) config.loop.convergence.enabled = true;

  const gsax::StudyResult result = gsax::run_study(config);
  std::cerr << "gsax: " << result.trials.size() << " trial(s), " << result.failed
            << " failed; output in " << config.output << "\n";
  for (const auto& t : result.trials) {
    if (t.trace.status == gsax::TerminalStatus::error) {
      std::cerr << "gsax: " << t.strategy << " trial " << t.trial << ": " << t.trace.message << "\n";
    }
  }
  return result.failed > 0 ? kRuntime : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive Gaussian-process Sobol sensitivity studies"};
  app.require_subcommand(1);

  RunFlags flags;
  flags.values.reserve(32);
  CLI::App* run = app.add_subcommand("run", "Run seeded trials of one or more strategies");
  run->add_option("--config", flags.config_file, "Flat key = value study file; flags override it");
  add_setting(run, flags, "--benchmark", "benchmark", "sqexp2|sqexp6|ishigami|gfunction|gaussian15");
  add_setting(run, flags, "--strategy,--strategies", "strategies",
              "Comma-separated strategy names (see `gsax list`)");
  add_setting(run, flags, "--initial", "n_initial", "Initial Latin hypercube size");
  add_setting(run, flags, "--budget", "budget", "Total model evaluations per trial");
  add_setting(run, flags, "--candidates", "n_candidates", "Candidate pool size per iteration");
  add_setting(run, flags, "--grid", "n_grid", "Main-effect grid size");
  add_setting(run, flags, "--trials", "n_trials", "Trials per strategy");
  add_setting(run, flags, "--seed", "seed", "Base seed");
  add_setting(run, flags, "--jobs", "jobs", "Worker threads (default: GSAX_JOBS or 1)");
  add_setting(run, flags, "--out", "output", "Output directory");
  add_setting(run, flags, "--estimator", "estimator", "mean_predictor|full_gp");
  add_setting(run, flags, "--realizations", "n_realizations", "Realizations for full_gp");
  add_setting(run, flags, "--candidate-sampling", "candidates", "uniform|lhs");
  add_setting(run, flags, "--weights", "weight_mode", "uniform|sobol_proportional");
  add_setting(run, flags, "--basis", "basis", "linear|constant");
  add_setting(run, flags, "--epsilon", "epsilon", "Convergence threshold on index changes");
  add_setting(run, flags, "--patience", "patience", "Consecutive small changes required");
  add_setting(run, flags, "--refit-restarts", "refit_restarts", "Optimizer restarts per refit");
  add_setting(run, flags, "--emit", "emit", "Comma list of trace,aggregate,ratio_surface");
  flags.paired_opt = run->add_flag("--paired", flags.paired, "Share initial designs across strategies");
  flags.converge_opt = run->add_flag("--converge", flags.converge, "Stop trials once indices settle");

  double s = 0.0;
  double y = 1.0;
  int error_case = 1;
  std::size_t points = 101;
  double da_max = 1.0;
  double dy_max = -1.0;
  std::string surface_out;
  CLI::App* surface = app.add_subcommand("ratio-surface", "Tabulate the ratio-of-errors surface");
  surface->add_option("--s", s, "True index S")->required();
  surface->add_option("--y", y, "True total variance Y")->capture_default_str();
  surface->add_option("--case", error_case, "1: both under, 2: both over, 3: A over Y under, 4: A under Y over")
      ->check(CLI::Range(1, 4))
      ->capture_default_str();
  surface->add_option("--points", points, "Grid points per axis")->capture_default_str();
  surface->add_option("--da-max", da_max, "Largest numerator error")->capture_default_str();
  surface->add_option("--dy-max", dy_max, "Largest denominator error (default 0.5 Y)");
  surface->add_option("--out", surface_out, "Output CSV")->required();

  CLI::App* list = app.add_subcommand("list", "List benchmarks and strategies");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (*run) return run_command(flags);
    if (*surface) {
      if (points < 2) throw gsax::UsageError("--points must be >= 2");
      if (dy_max < 0.0) dy_max = 0.5 * y;
      const gsax::Vector d_a = gsax::uniform_grid(0.0, da_max, points);
      const gsax::Vector d_y = gsax::uniform_grid(0.0, dy_max, points);
      std::ostringstream ss;
      gsax::write_ratio_surface_csv(ss, d_a, d_y,
                                    gsax::ratio_error_surface(s, y, d_a, d_y, error_case));
      gsax::write_file_atomic(surface_out, ss.str());
      return 0;
    }
    if (*list) {
      std::cout << "benchmarks:";
      for (auto name : gsax::benchmark_names()) std::cout << ' ' << name;
      std::cout << "\nstrategies:";
      for (auto name : gsax::strategy_names()) std::cout << ' ' << name;
      std::cout << '\n';
      return 0;
    }
  } catch (const gsax::UsageError& e) {
    std::cerr << "gsax: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "gsax: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
