#include "gsax/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

namespace gsax {

Matrix lhs_sample(std::size_t n, const Bounds& bounds, Rng& rng) {
  if (n < 1) throw InvalidParameter("lhs_sample: n must be >= 1");
  const auto d = static_cast<Eigen::Index>(bounds.dim());
  Matrix out(static_cast<Eigen::Index>(n), d);
  std::vector<std::size_t> perm(n);
  for (Eigen::Index k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      const double u = (static_cast<double>(perm[i]) + uniform01(rng)) / static_cast<double>(n);
      out(static_cast<Eigen::Index>(i), k) = bounds.from_unit(static_cast<std::size_t>(k), u);
    }
  }
  return out;
}

Matrix lhs_sample(std::size_t n, const Bounds& bounds, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  return lhs_sample(n, bounds, rng);
}

Matrix uniform_sample(std::size_t n, const Bounds& bounds, Rng& rng) {
  const auto d = static_cast<Eigen::Index>(bounds.dim());
  Matrix out(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) {
      out(i, k) = bounds.from_unit(static_cast<std::size_t>(k), uniform01(rng));
    }
  }
  return out;
}

void LoopConfig::validate() const {
  if (n_initial < 2) throw InvalidParameter("loop: n_initial must be >= 2");
  if (budget < n_initial) throw InvalidParameter("loop: budget must be >= n_initial");
  if (n_candidates < 2) throw InvalidParameter("loop: n_candidates must be >= 2");
  if (n_grid < 2) throw InvalidParameter("loop: n_grid must be >= 2");
  if (!(convergence.epsilon > 0.0)) throw InvalidParameter("loop: epsilon must be > 0");
  if (convergence.patience < 1) throw InvalidParameter("loop: patience must be >= 1");
  if (estimator == Estimator::full_gp && n_realizations < 2) {
    throw InvalidParameter("loop: n_realizations must be >= 2");
  }
}

std::string_view to_string(TerminalStatus status) {
  switch (status) {
    case TerminalStatus::converged:
      return "converged";
    case TerminalStatus::budget_exhausted:
      return "budget_exhausted";
    default:
      return "error";
  }
}

bool check_convergence(const std::vector<TraceRecord>& records, double epsilon,
                       std::size_t patience) {
  if (patience == 0 || records.size() < patience + 1) return false;
  for (std::size_t k = records.size() - patience; k < records.size(); ++k) {
    const double delta = (records[k].sobol - records[k - 1].sobol).cwiseAbs().maxCoeff();
    if (!(delta < epsilon)) return false;
  }
  return true;
}

namespace {

// Stream tags for derive_seed, one per use of randomness.
enum Stream : std::uint64_t {
  kDesign = 1,
  kCandidates = 2,
  kSelection = 3,
  kSobol = 4,
  kFit = 5,
};

Matrix draw_candidates(const LoopConfig& config, const Bounds& bounds, std::size_t iteration,
                       std::size_t attempt) {
  Rng rng = make_rng(config.seed, kCandidates, (iteration << 8) | attempt);
  return config.candidates == CandidateSampling::lhs
             ? lhs_sample(config.n_candidates, bounds, rng)
             : uniform_sample(config.n_candidates, bounds, rng);
}

double evaluate_checked(const Problem& problem, const Vector& x) {
  if (!problem.bounds.contains(x)) {
    throw InvalidParameter("loop: refusing to evaluate outside bounds");
  }
  const double y = problem.evaluate(x);
  if (!std::isfinite(y)) throw InvalidParameter("loop: problem returned a non-finite value");
  return y;
}

}  // namespace

ConvergenceTrace run(const Problem& problem, const LoopConfig& config) {
  config.validate();
  if (!problem.evaluate) throw InvalidParameter("loop: problem has no evaluator");
  const std::size_t d = problem.bounds.dim();
  using Clock = std::chrono::steady_clock;

  ConvergenceTrace trace;
  trace.strategy = std::string(to_string(config.strategy.kind));
  trace.dim = d;
  trace.data.bounds = problem.bounds;

  const Matrix design = lhs_sample(config.n_initial, problem.bounds,
                                   derive_seed(config.design_seed.value_or(config.seed), kDesign));
  trace.data.inputs.resize(0, static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < design.rows(); ++i) {
    const Vector x = design.row(i).transpose();
    trace.data.append(x, evaluate_checked(problem, x));
  }

  std::optional<Vector> warm_theta;
  Vector selected;
  double score = std::numeric_limits<double>::quiet_NaN();
  bool fallback = false;

  for (std::size_t k = 0;; ++k) {
    const auto t0 = Clock::now();
    try {
      FitOptions fit_options;
      fit_options.basis = config.basis;
      fit_options.seed = derive_seed(config.seed, kFit, k);
      fit_options.restarts = warm_theta ? config.refit_restarts : config.initial_restarts;
      fit_options.warm_start = warm_theta;
      GpModel model;
      try {
        model = fit(trace.data, fit_options);
      } catch (const FitError& e) {
        model = e.best_model();
        trace.warnings.push_back("iteration " + std::to_string(k) + ": " + e.what());
      }
      warm_theta = model.theta();

      const Matrix candidates = draw_candidates(config, problem.bounds, k, 0);
      const double total_var = total_variance(model, candidates);

      std::optional<MarginalCache> cache;
      if (is_music(config.strategy.kind) || config.estimator == Estimator::full_gp) {
        cache.emplace(model, config.n_grid);
      }
      const SobolEstimate est =
          config.estimator == Estimator::full_gp
              ? estimate_full_gp(model, candidates, cache->effects(), config.n_realizations,
                                 derive_seed(config.seed, kSobol, k), total_var)
              : estimate_mean_predictor(model, candidates, total_var);

      TraceRecord rec;
      rec.iteration = k;
      rec.n_samples = trace.data.size();
      rec.total_var = est.total_var;
      rec.main_effect_vars = est.main_effect_vars;
      rec.sobol = est.indices;
      rec.sobol_std = est.index_std;
      rec.selected = selected;
      rec.score = score;
      rec.fit_converged = model.optimizer_converged();
      rec.random_fallback = fallback;
      rec.wall_ms = config.record_time
                        ? std::chrono::duration<double, std::milli>(Clock::now() - t0).count()
                        : 0.0;
      trace.records.push_back(std::move(rec));

      if (config.convergence.enabled &&
          check_convergence(trace.records, config.convergence.epsilon,
                            config.convergence.patience)) {
        trace.status = TerminalStatus::converged;
        break;
      }
      if (trace.data.size() >= config.budget) {
        trace.status = TerminalStatus::budget_exhausted;
        break;
      }

      const Vector weights =
          resolve_weights(config.strategy.weight_mode, d, &trace.records.back().sobol);
      Rng rng = make_rng(config.seed, kSelection, k);
      bool placed = false;
      for (std::size_t attempt = 0; attempt <= config.max_redraws && !placed; ++attempt) {
        const Matrix pool =
            attempt == 0 ? candidates : draw_candidates(config, problem.bounds, k, attempt);
        Vector x;
        fallback = false;
        if (config.strategy.kind == StrategyKind::music_componentwise) {
          const ComponentwiseChoice choice = select_componentwise_music(*cache, pool, rng);
          x = choice.point;
          score = choice.improvement;
          fallback = choice.fallback;
        } else {
          const Selection s =
              select_next(model, cache ? &*cache : nullptr, pool, config.strategy.kind, weights, rng);
          x = pool.row(static_cast<Eigen::Index>(s.index)).transpose();
          score = s.score;
        }
        if (trace.data.find_duplicate(x)) {
          trace.warnings.push_back("iteration " + std::to_string(k) +
                                   ": proposal duplicates a training point; redrawing candidates");
          continue;
        }
        trace.data.append(x, evaluate_checked(problem, x));
        selected = x;
        placed = true;
      }
      if (!placed) {
        throw SelectionError("every candidate redraw proposed an existing training point");
      }
    } catch (const Error& e) {
      trace.status = TerminalStatus::error;
      trace.message = "iteration " + std::to_string(k) + ": " + e.what();
      break;
    }
  }
  return trace;
}

}  // namespace gsax
