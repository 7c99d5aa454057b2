#pragma once

#include "gsax/benchmarks.hpp"
#include "gsax/driver.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gsax {

struct StudyConfig {
  std::string benchmark = "ishigami";
  std::vector<std::string> strategies{"random"};
  std::size_t n_trials = 1;
  /// Studies run to the budget unless convergence is switched on.
  LoopConfig loop = [] {
    LoopConfig l;
    l.convergence.enabled = false;
    return l;
  }();
  /// Share each trial's initial design across strategies.
  bool paired = false;
  std::size_t jobs = 1;
  std::string output = "results";
  bool emit_trace = true;
  bool emit_aggregate = true;
  bool emit_ratio_surface = false;

  void validate() const;
};

/// Applies one `key = value` setting named after a StudyConfig field.
/// Throws UsageError for unknown keys or malformed values.
void apply_setting(StudyConfig& config, const std::string& key, const std::string& value);

/// Reads flat `key = value` lines; '#' starts a comment.
void apply_config_text(StudyConfig& config, std::string_view text);

/// Seed of one (trial, strategy) run.
std::uint64_t trial_seed(std::uint64_t base, std::size_t trial, std::size_t strategy_index);

struct Truth {
  double total_var = 0.0;
  Vector main_effect_vars;
  Vector sobol;
};

Truth truth_of(const Benchmark& benchmark);

struct AggregateRecord {
  std::string strategy;
  std::size_t n_samples = 0;
  std::string metric;  // total_var, mev_i or s_i (1-based)
  double mse = 0.0;
  std::optional<double> std;  // absent with fewer than two trials

  bool operator==(const AggregateRecord&) const = default;
};

/// Mean and sample standard deviation of squared errors across the trials
/// present at each sample count. Throws AlignmentError when the traces do
/// not share one sample-count axis.
std::vector<AggregateRecord> aggregate(const std::vector<ConvergenceTrace>& traces,
                                       const Truth& truth);

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRecord>& records);
std::vector<AggregateRecord> read_aggregate_csv(std::istream& in);

/// Long-format `dA,dY,dS` table of a ratio-error surface.
void write_ratio_surface_csv(std::ostream& out, const Vector& d_a, const Vector& d_y,
                             const Matrix& surface);

struct TrialResult {
  std::string strategy;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  ConvergenceTrace trace;
};

struct StudyResult {
  std::vector<TrialResult> trials;  // strategy-major, then trial
  std::vector<AggregateRecord> aggregates;
  std::size_t failed = 0;
};

/// Runs every (strategy, trial) pair on up to `jobs` threads and writes the
/// requested files under `output`. Results do not depend on `jobs`.
StudyResult run_study(const StudyConfig& config);

}  // namespace gsax
