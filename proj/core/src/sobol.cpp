#include "gsax/sobol.hpp"

#include <cmath>
#include <random>
#include <string>

namespace gsax {

std::string_view to_string(Estimator e) {
  return e == Estimator::full_gp ? "full_gp" : "mean_predictor";
}

Estimator parse_estimator(std::string_view name) {
  if (name == "mean_predictor" || name == "mean-predictor") return Estimator::mean_predictor;
  if (name == "full_gp" || name == "full-gp") return Estimator::full_gp;
  throw UsageError("unknown estimator '" + std::string(name) + "'");
}

double sample_variance(const Vector& values) {
  if (values.size() < 2) throw InvalidParameter("sample_variance: need at least 2 values");
  const double mean = values.mean();
  return (values.array() - mean).square().sum() / static_cast<double>(values.size() - 1);
}

double total_variance(const GpModel& model, const Matrix& candidates) {
  model.require_fitted();
  if (candidates.rows() < 2) throw InvalidParameter("total_variance: need at least 2 candidates");
  const double v = sample_variance(predict_mean_batch(model, candidates));
  if (!(v > 0.0)) {
    throw DegenerateVariance("total variance of the predictor is zero; Sobol ratios are undefined");
  }
  return v;
}

SobolEstimate estimate_mean_predictor(const GpModel& model, const Matrix& candidates) {
  return estimate_mean_predictor(model, candidates, total_variance(model, candidates));
}

SobolEstimate estimate_mean_predictor(const GpModel& model, const Matrix& candidates,
                                      double total_var) {
  model.require_fitted();
  if (!(total_var > 0.0)) throw DegenerateVariance("total variance must be positive");
  const auto d = static_cast<Eigen::Index>(model.dim());
  SobolEstimate est;
  est.method = Estimator::mean_predictor;
  est.n_candidates = static_cast<std::size_t>(candidates.rows());
  est.total_var = total_var;
  est.main_effect_vars.resize(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const MarginalProjector proj(model, {static_cast<std::size_t>(i)});
    est.main_effect_vars[i] = sample_variance(proj.mean(candidates.col(i)));
  }
  est.indices = est.main_effect_vars / total_var;
  return est;
}

SimulatedVariance simulate_main_effect_variance(const Vector& mean, const Matrix& factor,
                                                std::size_t n_s, Rng& rng) {
  if (n_s < 2) throw InvalidParameter("simulate_main_effect_variance: need n_s >= 2");
  const Eigen::Index m = mean.size();
  if (factor.rows() != m || factor.cols() != m) {
    throw InvalidParameter("simulate_main_effect_variance: factor does not match mean");
  }
  std::normal_distribution<double> normal;
  Matrix eps(m, static_cast<Eigen::Index>(n_s));
  for (Eigen::Index c = 0; c < eps.cols(); ++c) {
    for (Eigen::Index r = 0; r < m; ++r) eps(r, c) = normal(rng);
  }
  Matrix draws = factor.triangularView<Eigen::Lower>() * eps;
  draws.colwise() += mean;
  Vector per(static_cast<Eigen::Index>(n_s));
  for (Eigen::Index c = 0; c < draws.cols(); ++c) per[c] = sample_variance(draws.col(c));
  return {per.mean(), sample_variance(per)};
}

SobolEstimate estimate_full_gp(const GpModel& model, const Matrix& candidates,
                               std::size_t n_grid, std::size_t n_s, std::uint64_t seed) {
  model.require_fitted();
  std::vector<MainEffectGp> effects;
  effects.reserve(model.dim());
  for (std::size_t i = 0; i < model.dim(); ++i) effects.push_back(main_effect(model, i, n_grid));
  return estimate_full_gp(model, candidates, effects, n_s, seed);
}

SobolEstimate estimate_full_gp(const GpModel& model, const Matrix& candidates,
                               const std::vector<MainEffectGp>& effects, std::size_t n_s,
                               std::uint64_t seed, std::optional<double> total_var) {
  model.require_fitted();
  if (n_s < 2) throw InvalidParameter("estimate_full_gp: need n_s >= 2");
  if (effects.size() != model.dim()) {
    throw InvalidParameter("estimate_full_gp: need one main effect per input");
  }
  const double denom = total_var ? *total_var : total_variance(model, candidates);
  if (!(denom > 0.0)) throw DegenerateVariance("total variance must be positive");
  const auto d = static_cast<Eigen::Index>(model.dim());
  SobolEstimate est;
  est.method = Estimator::full_gp;
  est.n_candidates = static_cast<std::size_t>(candidates.rows());
  est.n_realizations = n_s;
  est.seed = seed;
  est.total_var = denom;
  est.main_effect_vars.resize(d);
  Vector spread(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    const auto& eff = effects[static_cast<std::size_t>(i)];
    const auto sim = simulate_main_effect_variance(eff.mean, eff.factor, n_s, rng);
    est.main_effect_vars[i] = sim.mean;
    spread[i] = std::sqrt(sim.variance);
  }
  est.indices = est.main_effect_vars / denom;
  est.index_std = spread / denom;
  return est;
}

}  // namespace gsax
