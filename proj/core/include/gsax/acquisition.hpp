#pragma once

#include "gsax/gp.hpp"
#include "gsax/marginal.hpp"
#include "gsax/random.hpp"

#include <optional>
#include <string_view>
#include <vector>

namespace gsax {

enum class StrategyKind {
  random,
  eigf,
  vigf,
  music_eigf_d1,
  music_eigf_d2,
  music_vigf_d1,
  music_vigf_d2,
  music_componentwise,
};

enum class WeightMode { uniform, sobol_proportional };

struct Strategy {
  StrategyKind kind = StrategyKind::random;
  WeightMode weight_mode = WeightMode::uniform;
};

/// Stable CLI name, e.g. "music-vigf-d2".
std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);
const std::vector<std::string_view>& strategy_names();

std::string_view to_string(WeightMode mode);
WeightMode parse_weight_mode(std::string_view name);

bool is_music(StrategyKind kind);

/// Throws InvalidParameter unless w >= 0 and |sum(w) - 1| <= 1e-12.
void validate_weights(const Vector& weights, std::size_t dim);

/// Divides nonnegative weights by their sum.
Vector normalize_weights(const Vector& raw);

/// Uniform 1/d, or the current index estimates clamped at zero and
/// normalized (uniform again when they are all zero).
Vector resolve_weights(WeightMode mode, std::size_t dim, const Vector* sobol_indices = nullptr);

/// Euclidean nearest training row in normalized space.
std::size_t nearest_training_point(const GpModel& model, const Vector& x);

double eigf(const GpModel& model, const Vector& x);
double vigf(const GpModel& model, const Vector& x);

/// Posterior moments and nearest-neighbor output for a batch of candidates.
struct GlobalFitTerms {
  Vector mean;
  Vector variance;
  Vector nearest_output;
  Vector nearest_sq_distance;  // normalized space
};

GlobalFitTerms global_fit_terms(const GpModel& model, const Matrix& candidates);
Vector eigf_scores(const GlobalFitTerms& terms);
Vector vigf_scores(const GlobalFitTerms& terms);

struct Improvement {
  double expectation = 0.0;
  double variance = 0.0;
};

/// Moments of (A - a*)^2 for A ~ Normal(mu, var).
Improvement improvement_moments(double mu, double mu_star, double var);

/// Main effects of every input on a grid, plus exact mean evaluation.
class MarginalCache {
 public:
  MarginalCache(const GpModel& model, std::size_t n_grid);

  const GpModel& model() const { return *model_; }
  std::size_t dim() const { return effects_.size(); }
  std::size_t grid_size() const { return static_cast<std::size_t>(effects_.front().grid.size()); }
  const MainEffectGp& effect(std::size_t i) const { return effects_[i]; }
  const std::vector<MainEffectGp>& effects() const { return effects_; }

  /// Exact main-effect mean of input i at original-unit coordinates.
  Vector mean(std::size_t i, const Vector& coords) const;
  /// Main-effect variance from the nearest grid cell.
  double variance_at(std::size_t i, double coord) const;

 private:
  const GpModel* model_;
  std::vector<MainEffectGp> effects_;
  std::vector<MarginalProjector> projectors_;
};

/// Per-candidate, per-input MUSIC ingredients (rows = candidates).
struct MusicTerms {
  Matrix expectation;  // E[I_{A_i}]
  Matrix variance;     // V[I_{A_i}]
  Matrix abs_gap;      // |x_i - x_i*| to the nearest training projection, normalized
  Vector sq_distance;  // squared distance to the nearest training point, normalized
};

MusicTerms music_improvements(const MarginalCache& cache, const Matrix& candidates);

/// One row of MusicTerms combined per the chosen variant.
double music_score(StrategyKind variant, const Vector& weights, const Vector& expectation,
                   const Vector& variance, const Vector& abs_gap, double sq_distance);

/// Scores of every candidate. `cache` is required for MUSIC variants.
Vector score_candidates(const GpModel& model, const MarginalCache* cache,
                        const Matrix& candidates, StrategyKind kind, const Vector& weights);

/// Index of the largest finite score, lowest index on ties.
/// Throws SelectionError when no score is finite.
std::size_t argmax_score(const Vector& scores);

struct Selection {
  std::size_t index = 0;
  double score = 0.0;
};

/// Chooses among candidates for every kind except music_componentwise.
Selection select_next(const GpModel& model, const MarginalCache* cache, const Matrix& candidates,
                      StrategyKind kind, const Vector& weights, Rng& rng);

struct ComponentwiseChoice {
  Vector point;
  std::size_t dim = 0;
  std::size_t candidate = 0;
  double improvement = 0.0;
  bool fallback = false;  // every improvement was zero; the point is uniform random
};

/// Largest entry of an (candidates x inputs) improvement matrix, scanning
/// inputs first then candidates, lowest indices on ties.
std::pair<std::size_t, std::size_t> componentwise_argmax(const Matrix& expectation);

ComponentwiseChoice select_componentwise_music(const MarginalCache& cache,
                                               const Matrix& candidates, Rng& rng);

}  // namespace gsax
