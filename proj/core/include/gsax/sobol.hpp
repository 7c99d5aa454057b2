#pragma once

#include "gsax/gp.hpp"
#include "gsax/marginal.hpp"
#include "gsax/random.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace gsax {

enum class Estimator { mean_predictor, full_gp };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view name);

struct SobolEstimate {
  Vector indices;
  std::optional<Vector> index_std;
  Vector main_effect_vars;
  double total_var = 0.0;
  Estimator method = Estimator::mean_predictor;
  std::size_t n_candidates = 0;
  std::optional<std::size_t> n_realizations;
  std::uint64_t seed = 0;

  /// Sum of indices above 1.1, which only estimation error can produce.
  bool oversummed() const { return indices.sum() > 1.1; }
};

/// Unbiased (n - 1) sample variance.
double sample_variance(const Vector& values);

/// Sample variance of the posterior mean over the rows of `candidates`.
/// Throws DegenerateVariance when it is zero.
double total_variance(const GpModel& model, const Matrix& candidates);

/// Indices from the variance of each exact main-effect mean over the
/// candidates' coordinates.
SobolEstimate estimate_mean_predictor(const GpModel& model, const Matrix& candidates);

/// Same, with the candidates' total variance already known.
SobolEstimate estimate_mean_predictor(const GpModel& model, const Matrix& candidates,
                                      double total_var);

struct SimulatedVariance {
  double mean = 0.0;      // average of per-realization sample variances
  double variance = 0.0;  // sample variance of those per-realization values
};

/// Draws n_s realizations mean + factor * eps and summarizes their grid variances.
SimulatedVariance simulate_main_effect_variance(const Vector& mean, const Matrix& factor,
                                                std::size_t n_s, Rng& rng);

/// Indices from n_s simulated main-effect realizations on an n_grid grid per input.
/// Dimension i draws from the substream derived from (seed, i).
SobolEstimate estimate_full_gp(const GpModel& model, const Matrix& candidates,
                               std::size_t n_grid, std::size_t n_s, std::uint64_t seed);

/// Same, reusing main effects that were already computed (one per input, in order).
SobolEstimate estimate_full_gp(const GpModel& model, const Matrix& candidates,
                               const std::vector<MainEffectGp>& effects, std::size_t n_s,
                               std::uint64_t seed, std::optional<double> total_var = {});

}  // namespace gsax
