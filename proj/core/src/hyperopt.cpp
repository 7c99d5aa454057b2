#include "gsax/gp.hpp"
#include "gsax/random.hpp"

#include "gp_internal.hpp"

#include <ceres/gradient_problem.h>
#include <ceres/gradient_problem_solver.h>
#include <glog/logging.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <vector>

namespace gsax {
namespace {

/// Box-constrained log-space coordinates: log(v) = mid + half * tanh(u).
struct LogBox {
  double mid = 0.0;
  double half = 1.0;

  LogBox(double lo, double hi)
      : mid(0.5 * (std::log(lo) + std::log(hi))), half(0.5 * (std::log(hi) - std::log(lo))) {}

  double value(double u) const { return std::exp(mid + half * std::tanh(u)); }
  /// d log(v) / du
  double slope(double u) const {
    const double t = std::tanh(u);
    return half * (1.0 - t * t);
  }
  double from_log(double log_v) const {
    const double s = std::clamp((log_v - mid) / half, -1.0 + 1e-9, 1.0 - 1e-9);
    return std::atanh(s);
  }
};

class NegLogLikelihood final : public ceres::FirstOrderFunction {
 public:
  NegLogLikelihood(const detail::NormalizedData& data, const Matrix& basis, LogBox theta_box,
                   std::optional<LogBox> nugget_box, double fixed_nugget)
      : data_(data),
        basis_(basis),
        theta_box_(theta_box),
        nugget_box_(nugget_box),
        fixed_nugget_(fixed_nugget),
        d_(static_cast<int>(data.unit.cols())) {
    // Squared coordinate differences, one n x n matrix per input.
    const Eigen::Index n = data_.unit.rows();
    sq_diff_.resize(static_cast<std::size_t>(d_));
    for (int k = 0; k < d_; ++k) {
      Matrix& m = sq_diff_[static_cast<std::size_t>(k)];
      m.resize(n, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
          const double diff = data_.unit(i, k) - data_.unit(j, k);
          m(i, j) = diff * diff;
        }
      }
    }
  }

  int NumParameters() const override { return d_ + (nugget_box_ ? 1 : 0); }

  bool Evaluate(const double* parameters, double* cost, double* gradient) const override {
    const Vector theta = theta_of(parameters);
    const double tau = nugget_of(parameters);

    const Eigen::Index n = data_.unit.rows();
    Matrix r0 = Matrix::Zero(n, n);
    for (int k = 0; k < d_; ++k) r0.noalias() -= theta[k] * sq_diff_[static_cast<std::size_t>(k)];
    r0 = r0.array().exp().matrix();

    const auto prof = detail::profile(detail::apply_nugget(r0, tau), basis_, data_.y);
    if (!prof) return false;
    *cost = -prof->log_likelihood;
    if (!std::isfinite(*cost)) return false;
    if (gradient == nullptr) return true;

    const double s2 = std::max(prof->sigma2, detail::kSigma2Floor);
    Matrix w = prof->llt.solve(Matrix::Identity(n, n));
    w = (prof->alpha * prof->alpha.transpose()) / s2 - w;

    const Matrix r0w = r0.cwiseProduct(w);
    for (int k = 0; k < d_; ++k) {
      const double dlog = -0.5 * theta[k] * (1.0 - tau) *
                          sq_diff_[static_cast<std::size_t>(k)].cwiseProduct(r0w).sum();
      gradient[k] = -dlog * theta_box_.slope(parameters[k]);
    }
    if (nugget_box_) {
      const double dlog = 0.5 * tau * (w.trace() - r0w.sum());
      gradient[d_] = -dlog * nugget_box_->slope(parameters[d_]);
    }
    return true;
  }

  Vector theta_of(const double* parameters) const {
    Vector theta(d_);
    for (int k = 0; k < d_; ++k) theta[k] = theta_box_.value(parameters[k]);
    return theta;
  }

  double nugget_of(const double* parameters) const {
    return nugget_box_ ? nugget_box_->value(parameters[d_]) : fixed_nugget_;
  }

 private:
  const detail::NormalizedData& data_;
  const Matrix& basis_;
  LogBox theta_box_;
  std::optional<LogBox> nugget_box_;
  double fixed_nugget_;
  int d_;
  std::vector<Matrix> sq_diff_;
};

GpModel fit_constant_outputs(const TrainingSet& data, const FitOptions& options, double tau) {
  for (double t : {1.0, 10.0, 100.0, 1000.0}) {
    try {
      return GpModel::condition(data, options.basis,
                                Vector::Constant(static_cast<Eigen::Index>(data.dim()), t), tau);
    } catch (const ConditioningError&) {
    }
  }
  throw ConditioningError("constant training outputs: no correlation length gives an SPD matrix");
}

/// Latin hypercube over [0,1]^d.
Matrix unit_lhs(int n, int d, Rng& rng) {
  Matrix out(n, d);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int k = 0; k < d; ++k) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) {
      out(i, k) = (perm[static_cast<std::size_t>(i)] + uniform01(rng)) / n;
    }
  }
  return out;
}

void quiet_solver_logging() {
  static std::once_flag once;
  std::call_once(once, [] { FLAGS_minloglevel = google::GLOG_ERROR; });
}

}  // namespace

GpModel fit(const TrainingSet& data, const FitOptions& options) {
  data.validate();
  if (!(options.theta_min > 0.0 && options.theta_min < options.theta_max)) {
    throw InvalidParameter("fit: require 0 < theta_min < theta_max");
  }
  if (options.restarts < 0) throw InvalidParameter("fit: restarts must be >= 0");
  const double fixed_tau = options.nugget_mode == NuggetMode::fixed ? options.nugget : 0.0;
  if (options.nugget_mode == NuggetMode::fixed && !(fixed_tau >= 0.0 && fixed_tau < 1.0)) {
    throw InvalidParameter("fit: fixed nugget must lie in [0, 1)");
  }
  const int d = static_cast<int>(data.dim());
  const std::size_t p = options.basis == Basis::constant ? 1 : data.dim() + 1;
  if (data.size() < p + 1) throw InvalidParameter("fit: need at least basis size + 1 samples");

  const double spread = data.outputs.maxCoeff() - data.outputs.minCoeff();
  if (spread == 0.0) {
    GpModel m = fit_constant_outputs(data, options, fixed_tau);
    m.set_optimizer_converged(true);
    return m;
  }

  const auto norm = detail::normalize(data);
  const Matrix basis = detail::basis_matrix(norm.unit, options.basis);
  const LogBox theta_box(options.theta_min, options.theta_max);
  std::optional<LogBox> nugget_box;
  if (options.nugget_mode == NuggetMode::estimated) {
    nugget_box.emplace(options.nugget_min, options.nugget_max);
  }

  auto* objective = new NegLogLikelihood(norm, basis, theta_box, nugget_box, fixed_tau);
  ceres::GradientProblem problem(objective);  // takes ownership
  const int np = objective->NumParameters();

  std::vector<std::vector<double>> starts;
  if (options.warm_start) {
    if (options.warm_start->size() != d) throw InvalidParameter("fit: warm start has wrong size");
    std::vector<double> s(static_cast<std::size_t>(np));
    for (int k = 0; k < d; ++k) {
      s[static_cast<std::size_t>(k)] =
          theta_box.from_log(std::log(std::max((*options.warm_start)[k], 1e-300)));
    }
    if (nugget_box) s[static_cast<std::size_t>(d)] = nugget_box->from_log(std::log(1e-6));
    starts.push_back(std::move(s));
  }
  if (options.restarts > 0) {
    Rng rng = make_rng(options.seed, 0x6670);
    const Matrix design = unit_lhs(options.restarts, np, rng);
    for (int r = 0; r < options.restarts; ++r) {
      std::vector<double> s(static_cast<std::size_t>(np));
      // Keep the starts away from the saturated ends of tanh.
      for (int k = 0; k < np; ++k) {
        s[static_cast<std::size_t>(k)] = std::atanh(0.9 * (2.0 * design(r, k) - 1.0));
      }
      starts.push_back(std::move(s));
    }
  }
  if (starts.empty()) throw InvalidParameter("fit: no starting point (restarts = 0, no warm start)");

  quiet_solver_logging();
  ceres::GradientProblemSolver::Options solver_options;
  solver_options.line_search_direction_type = ceres::LBFGS;
  solver_options.max_num_iterations = options.max_iterations;
  solver_options.logging_type = ceres::SILENT;
  solver_options.minimizer_progress_to_stdout = false;

  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<double> best_params;
  bool any_converged = false;
  for (auto& s : starts) {
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(solver_options, problem, s.data(), &summary);
    double cost = 0.0;
    if (!problem.Evaluate(s.data(), &cost, nullptr) || !std::isfinite(cost)) continue;
    if (summary.termination_type == ceres::CONVERGENCE ||
        summary.termination_type == ceres::USER_SUCCESS) {
      any_converged = true;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_params = s;
    }
  }
  if (best_params.empty()) {
    throw ConditioningError("fit: no starting point gave a positive definite correlation matrix");
  }

  GpModel model = GpModel::condition(data, options.basis, objective->theta_of(best_params.data()),
                                     objective->nugget_of(best_params.data()));
  model.set_optimizer_converged(any_converged);
  if (!any_converged) {
    throw FitError("fit: no restart reached the optimizer's convergence tolerance",
                   std::move(model));
  }
  return model;
}

}  // namespace gsax
