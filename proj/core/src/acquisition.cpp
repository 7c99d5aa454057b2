#include "gsax/acquisition.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace gsax {
namespace {

constexpr std::array<std::pair<StrategyKind, std::string_view>, 8> kStrategyNames{{
    {StrategyKind::random, "random"},
    {StrategyKind::eigf, "eigf"},
    {StrategyKind::vigf, "vigf"},
    {StrategyKind::music_eigf_d1, "music-eigf-d1"},
    {StrategyKind::music_eigf_d2, "music-eigf-d2"},
    {StrategyKind::music_vigf_d1, "music-vigf-d1"},
    {StrategyKind::music_vigf_d2, "music-vigf-d2"},
    {StrategyKind::music_componentwise, "music-cw"},
}};

Matrix unit_rows(const Bounds& bounds, const Matrix& points) {
  Matrix u(points.rows(), points.cols());
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    u.col(k) = (points.col(k).array() - bounds.lower()[k]) / bounds.width(static_cast<std::size_t>(k));
  }
  return u;
}

/// Nearest training row (normalized Euclidean) for each candidate row.
void nearest_rows(const GpModel& model, const Matrix& unit_candidates,
                  std::vector<Eigen::Index>& index, Vector& sq_distance) {
  const Matrix& train = model.unit_inputs();
  const Eigen::Index m = unit_candidates.rows();
  index.assign(static_cast<std::size_t>(m), 0);
  sq_distance.resize(m);
  const Vector train_norm = train.rowwise().squaredNorm();
  constexpr Eigen::Index kChunk = 1024;
  for (Eigen::Index start = 0; start < m; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, m - start);
    const auto block = unit_candidates.middleRows(start, len);
    Matrix approx = -2.0 * (train * block.transpose());
    approx.colwise() += train_norm;
    for (Eigen::Index j = 0; j < len; ++j) {
      Eigen::Index best = 0;
      approx.col(j).minCoeff(&best);
      index[static_cast<std::size_t>(start + j)] = best;
      sq_distance[start + j] = (train.row(best) - block.row(j)).squaredNorm();
    }
  }
}

}  // namespace

std::string_view to_string(StrategyKind kind) {
  for (const auto& [k, name] : kStrategyNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (const auto& [k, n] : kStrategyNames) {
    if (n == name) return k;
  }
  throw UsageError("unknown strategy '" + std::string(name) + "'");
}

const std::vector<std::string_view>& strategy_names() {
  static const std::vector<std::string_view> names = [] {
    std::vector<std::string_view> out;
    for (const auto& entry : kStrategyNames) out.push_back(entry.second);
    return out;
  }();
  return names;
}

std::string_view to_string(WeightMode mode) {
  return mode == WeightMode::uniform ? "uniform" : "sobol_proportional";
}

WeightMode parse_weight_mode(std::string_view name) {
  if (name == "uniform") return WeightMode::uniform;
  if (name == "sobol_proportional" || name == "sobol-proportional") {
    return WeightMode::sobol_proportional;
  }
  throw UsageError("unknown weight mode '" + std::string(name) + "'");
}

bool is_music(StrategyKind kind) {
  return kind == StrategyKind::music_eigf_d1 || kind == StrategyKind::music_eigf_d2 ||
         kind == StrategyKind::music_vigf_d1 || kind == StrategyKind::music_vigf_d2 ||
         kind == StrategyKind::music_componentwise;
}

void validate_weights(const Vector& weights, std::size_t dim) {
  if (weights.size() != static_cast<Eigen::Index>(dim)) {
    throw InvalidParameter("weights: need one weight per input");
  }
  if (!weights.allFinite() || (weights.array() < 0.0).any()) {
    throw InvalidParameter("weights: must be finite and nonnegative");
  }
  if (std::abs(weights.sum() - 1.0) > 1e-12) {
    throw InvalidParameter("weights: must sum to 1");
  }
}

Vector normalize_weights(const Vector& raw) {
  if ((raw.array() < 0.0).any() || !raw.allFinite()) {
    throw InvalidParameter("weights: must be finite and nonnegative");
  }
  const double total = raw.sum();
  if (!(total > 0.0)) throw InvalidParameter("weights: sum must be positive");
  return raw / total;
}

Vector resolve_weights(WeightMode mode, std::size_t dim, const Vector* sobol_indices) {
  const auto d = static_cast<Eigen::Index>(dim);
  const Vector uniform = Vector::Constant(d, 1.0 / static_cast<double>(dim));
  if (mode == WeightMode::uniform || sobol_indices == nullptr) return uniform;
  if (sobol_indices->size() != d) throw InvalidParameter("weights: index vector has wrong size");
  const Vector clamped = sobol_indices->cwiseMax(0.0);
  if (!(clamped.sum() > 0.0) || !clamped.allFinite()) return uniform;
  return clamped / clamped.sum();
}

std::size_t nearest_training_point(const GpModel& model, const Vector& x) {
  model.require_fitted();
  const Vector u = model.bounds().to_unit(x);
  Eigen::Index best = 0;
  (model.unit_inputs().rowwise() - u.transpose()).rowwise().squaredNorm().minCoeff(&best);
  return static_cast<std::size_t>(best);
}

GlobalFitTerms global_fit_terms(const GpModel& model, const Matrix& candidates) {
  model.require_fitted();
  GlobalFitTerms t;
  const BatchPrediction pred = predict_batch(model, candidates);
  t.mean = pred.mean;
  t.variance = pred.variance;
  std::vector<Eigen::Index> idx;
  nearest_rows(model, unit_rows(model.bounds(), candidates), idx, t.nearest_sq_distance);
  t.nearest_output.resize(candidates.rows());
  for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
    t.nearest_output[j] = model.outputs()[idx[static_cast<std::size_t>(j)]];
  }
  return t;
}

Vector eigf_scores(const GlobalFitTerms& t) {
  return ((t.mean - t.nearest_output).array().square() + t.variance.array()).matrix();
}

Vector vigf_scores(const GlobalFitTerms& t) {
  return (4.0 * t.variance.array() *
          ((t.mean - t.nearest_output).array().square() + 2.0 * t.variance.array()))
      .matrix();
}

double eigf(const GpModel& model, const Vector& x) {
  const Prediction p = predict(model, x);
  const double gap = p.mean - model.outputs()[static_cast<Eigen::Index>(nearest_training_point(model, x))];
  return gap * gap + p.variance;
}

double vigf(const GpModel& model, const Vector& x) {
  const Prediction p = predict(model, x);
  const double gap = p.mean - model.outputs()[static_cast<Eigen::Index>(nearest_training_point(model, x))];
  return 4.0 * p.variance * (gap * gap + 2.0 * p.variance);
}

Improvement improvement_moments(double mu, double mu_star, double var) {
  const double gap2 = (mu - mu_star) * (mu - mu_star);
  return {gap2 + var, 4.0 * var * (gap2 + 2.0 * var)};
}

// ---------------------------------------------------------------------------

MarginalCache::MarginalCache(const GpModel& model, std::size_t n_grid) : model_(&model) {
  model.require_fitted();
  effects_.reserve(model.dim());
  projectors_.reserve(model.dim());
  for (std::size_t i = 0; i < model.dim(); ++i) {
    effects_.push_back(main_effect(model, i, n_grid));
    projectors_.emplace_back(model, std::vector<std::size_t>{i});
  }
}

Vector MarginalCache::mean(std::size_t i, const Vector& coords) const {
  return projectors_.at(i).mean(coords);
}

double MarginalCache::variance_at(std::size_t i, double coord) const {
  const MainEffectGp& e = effects_.at(i);
  const double lo = e.grid[0];
  const double hi = e.grid[e.grid.size() - 1];
  const double pos = (coord - lo) / (hi - lo) * static_cast<double>(e.grid.size() - 1);
  const auto cell = static_cast<Eigen::Index>(
      std::clamp(std::lround(pos), 0L, static_cast<long>(e.grid.size() - 1)));
  return e.variance[cell];
}

MusicTerms music_improvements(const MarginalCache& cache, const Matrix& candidates) {
  const GpModel& model = cache.model();
  const Eigen::Index m = candidates.rows();
  const auto d = static_cast<Eigen::Index>(model.dim());
  if (candidates.cols() != d) throw InvalidParameter("music: candidates have the wrong dimension");
  const Matrix unit = unit_rows(model.bounds(), candidates);
  const Matrix& train = model.unit_inputs();
  const Eigen::Index n = train.rows();

  MusicTerms t;
  t.expectation.resize(m, d);
  t.variance.resize(m, d);
  t.abs_gap.resize(m, d);
  std::vector<Eigen::Index> unused;
  nearest_rows(model, unit, unused, t.sq_distance);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    // Exact means at every training projection, then a sorted lookup for the nearest.
    const Vector train_coords = train.col(i).unaryExpr(
        [&](double u) { return model.bounds().from_unit(ii, u); });
    const Vector train_means = cache.mean(ii, train_coords);
    const Vector cand_means = cache.mean(ii, candidates.col(i));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return train(a, i) < train(b, i); });
    for (Eigen::Index j = 0; j < m; ++j) {
      const double u = unit(j, i);
      auto it = std::lower_bound(order.begin(), order.end(), u,
                                 [&](Eigen::Index l, double v) { return train(l, i) < v; });
      Eigen::Index best;
      if (it == order.end()) {
        best = order.back();
      } else if (it == order.begin()) {
        best = *it;
      } else {
        const Eigen::Index above = *it;
        const Eigen::Index below = *(it - 1);
        best = (u - train(below, i) <= train(above, i) - u) ? below : above;
      }
      const double var = cache.variance_at(ii, candidates(j, i));
      const Improvement imp = improvement_moments(cand_means[j], train_means[best], var);
      t.expectation(j, i) = imp.expectation;
      t.variance(j, i) = imp.variance;
      t.abs_gap(j, i) = std::abs(u - train(best, i));
    }
  }
  return t;
}

double music_score(StrategyKind variant, const Vector& weights, const Vector& expectation,
                   const Vector& variance, const Vector& abs_gap, double sq_distance) {
  validate_weights(weights, static_cast<std::size_t>(expectation.size()));
  switch (variant) {
    case StrategyKind::music_eigf_d1:
      return (weights.array() * abs_gap.array() * expectation.array()).sum();
    case StrategyKind::music_vigf_d1:
      return (weights.array() * abs_gap.array() * variance.array()).sum();
    case StrategyKind::music_eigf_d2:
      return sq_distance * weights.dot(expectation);
    case StrategyKind::music_vigf_d2:
      return sq_distance * weights.dot(variance);
    default:
      throw InvalidParameter("music_score: not a MUSIC D1/D2 variant");
  }
}

Vector score_candidates(const GpModel& model, const MarginalCache* cache,
                        const Matrix& candidates, StrategyKind kind, const Vector& weights) {
  switch (kind) {
    case StrategyKind::eigf:
      return eigf_scores(global_fit_terms(model, candidates));
    case StrategyKind::vigf:
      return vigf_scores(global_fit_terms(model, candidates));
    case StrategyKind::music_eigf_d1:
    case StrategyKind::music_eigf_d2:
    case StrategyKind::music_vigf_d1:
    case StrategyKind::music_vigf_d2: {
      if (cache == nullptr) throw InvalidParameter("score_candidates: MUSIC needs a marginal cache");
      validate_weights(weights, model.dim());
      const MusicTerms t = music_improvements(*cache, candidates);
      Vector scores(candidates.rows());
      for (Eigen::Index j = 0; j < candidates.rows(); ++j) {
        scores[j] = music_score(kind, weights, t.expectation.row(j).transpose(),
                                t.variance.row(j).transpose(), t.abs_gap.row(j).transpose(),
                                t.sq_distance[j]);
      }
      return scores;
    }
    default:
      throw InvalidParameter("score_candidates: strategy has no per-candidate score");
  }
}

std::size_t argmax_score(const Vector& scores) {
  Eigen::Index best = -1;
  double best_value = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < scores.size(); ++j) {
    if (!std::isfinite(scores[j])) continue;
    if (best < 0 || scores[j] > best_value) {
      best = j;
      best_value = scores[j];
    }
  }
  if (best < 0) throw SelectionError("no candidate has a finite acquisition score");
  return static_cast<std::size_t>(best);
}

Selection select_next(const GpModel& model, const MarginalCache* cache, const Matrix& candidates,
                      StrategyKind kind, const Vector& weights, Rng& rng) {
  if (candidates.rows() == 0) throw InvalidParameter("select_next: no candidates");
  if (kind == StrategyKind::music_componentwise) {
    throw InvalidParameter("select_next: use select_componentwise_music for music-cw");
  }
  if (kind == StrategyKind::random) {
    const auto m = static_cast<double>(candidates.rows());
    const auto idx = static_cast<std::size_t>(std::min(uniform01(rng) * m, m - 1.0));
    return {idx, std::numeric_limits<double>::quiet_NaN()};
  }
  const Vector scores = score_candidates(model, cache, candidates, kind, weights);
  const std::size_t idx = argmax_score(scores);
  return {idx, scores[static_cast<Eigen::Index>(idx)]};
}

std::pair<std::size_t, std::size_t> componentwise_argmax(const Matrix& expectation) {
  Eigen::Index best_dim = -1;
  Eigen::Index best_row = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < expectation.cols(); ++i) {
    for (Eigen::Index j = 0; j < expectation.rows(); ++j) {
      const double v = expectation(j, i);
      if (std::isfinite(v) && (best_dim < 0 || v > best)) {
        best = v;
        best_dim = i;
        best_row = j;
      }
    }
  }
  if (best_dim < 0) throw SelectionError("no finite main-effect improvement");
  return {static_cast<std::size_t>(best_dim), static_cast<std::size_t>(best_row)};
}

ComponentwiseChoice select_componentwise_music(const MarginalCache& cache,
                                               const Matrix& candidates, Rng& rng) {
  const GpModel& model = cache.model();
  if (candidates.rows() == 0) throw InvalidParameter("select_componentwise_music: no candidates");
  const MusicTerms t = music_improvements(cache, candidates);
  const auto [dim, row] = componentwise_argmax(t.expectation);

  ComponentwiseChoice out;
  out.dim = dim;
  out.candidate = row;
  out.improvement = t.expectation(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(dim));
  out.fallback = !(out.improvement > 0.0);
  Vector u(static_cast<Eigen::Index>(model.dim()));
  for (Eigen::Index k = 0; k < u.size(); ++k) u[k] = uniform01(rng);
  out.point = model.bounds().from_unit(u);
  if (!out.fallback) {
    out.point[static_cast<Eigen::Index>(dim)] =
        candidates(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(dim));
  }
  return out;
}

}  // namespace gsax
