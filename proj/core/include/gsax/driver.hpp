#pragma once

#include "gsax/acquisition.hpp"
#include "gsax/gp.hpp"
#include "gsax/random.hpp"
#include "gsax/sobol.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gsax {

/// Latin hypercube: per input, one uniform point in each of n equal strata.
Matrix lhs_sample(std::size_t n, const Bounds& bounds, Rng& rng);
Matrix lhs_sample(std::size_t n, const Bounds& bounds, std::uint64_t seed);

/// n i.i.d. uniform points.
Matrix uniform_sample(std::size_t n, const Bounds& bounds, Rng& rng);

struct Problem {
  std::string name;
  Bounds bounds;
  std::function<double(const Vector&)> evaluate;
};

enum class CandidateSampling { uniform, lhs };

struct ConvergenceConfig {
  bool enabled = true;
  double epsilon = 0.005;
  std::size_t patience = 5;
};

struct LoopConfig {
  std::size_t n_initial = 10;
  std::size_t budget = 500;
  std::size_t n_candidates = 25000;
  std::size_t n_grid = 128;
  Strategy strategy;
  ConvergenceConfig convergence;
  std::uint64_t seed = 0;
  /// Seed for the initial design only; defaults to `seed`.
  std::optional<std::uint64_t> design_seed;
  Estimator estimator = Estimator::mean_predictor;
  std::size_t n_realizations = 200;
  CandidateSampling candidates = CandidateSampling::uniform;
  Basis basis = Basis::linear;
  int initial_restarts = 5;
  /// Restarts per refit, in addition to the warm start at the previous theta.
  int refit_restarts = 2;
  /// Candidate redraws allowed when a proposal duplicates a training point.
  std::size_t max_redraws = 10;
  bool record_time = false;

  void validate() const;
};

struct TraceRecord {
  std::size_t iteration = 0;
  std::size_t n_samples = 0;
  double total_var = 0.0;
  Vector main_effect_vars;
  Vector sobol;
  std::optional<Vector> sobol_std;
  Vector selected;  // empty for the initial record
  double score = 0.0;
  double wall_ms = 0.0;
  bool fit_converged = true;
  bool random_fallback = false;
};

enum class TerminalStatus { converged, budget_exhausted, error };

std::string_view to_string(TerminalStatus status);

struct ConvergenceTrace {
  std::string strategy;
  std::size_t dim = 0;
  std::vector<TraceRecord> records;
  TerminalStatus status = TerminalStatus::budget_exhausted;
  std::string message;
  std::vector<std::string> warnings;
  TrainingSet data;
};

/// True iff there are at least patience + 1 records and each of the last
/// `patience` steps moved every index by less than epsilon.
bool check_convergence(const std::vector<TraceRecord>& records, double epsilon,
                       std::size_t patience);

ConvergenceTrace run(const Problem& problem, const LoopConfig& config);

}  // namespace gsax
