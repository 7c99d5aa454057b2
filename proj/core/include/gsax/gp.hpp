#pragma once

#include "gsax/error.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace gsax {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Per-dimension support [lower_k, upper_k] of independent uniform inputs.
class Bounds {
 public:
  Bounds() = default;
  Bounds(Vector lower, Vector upper);

  static Bounds cube(std::size_t dim, double lower, double upper);

  std::size_t dim() const { return static_cast<std::size_t>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  double width(std::size_t k) const { return upper_[k] - lower_[k]; }

  bool contains(const Vector& x, double tol = 0.0) const;

  /// Affine map onto [0, 1]^d and back.
  Vector to_unit(const Vector& x) const;
  Vector from_unit(const Vector& u) const;
  double to_unit(std::size_t k, double x) const { return (x - lower_[k]) / width(k); }
  double from_unit(std::size_t k, double u) const { return lower_[k] + u * width(k); }

  bool operator==(const Bounds&) const = default;

 private:
  Vector lower_;
  Vector upper_;
};

/// Input rows with their scalar responses.
struct TrainingSet {
  Matrix inputs;  // n x d, one sample per row
  Vector outputs;
  Bounds bounds;

  std::size_t size() const { return static_cast<std::size_t>(inputs.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(inputs.cols()); }

  /// Throws InvalidParameter on shape mismatch, out-of-bounds rows, n < 2 or
  /// duplicate rows (closer than `duplicate_tol` in normalized max-norm).
  void validate(double duplicate_tol = 1e-12) const;

  /// Index of a row within `tol` (normalized max-norm) of `x`, if any.
  std::optional<std::size_t> find_duplicate(const Vector& x, double tol = 1e-12) const;

  void append(const Vector& x, double y);
};

/// Copy of `data` keeping only the first occurrence of near-identical rows.
TrainingSet deduplicate(const TrainingSet& data, double tol = 1e-12);

enum class Basis { constant, linear };
enum class NuggetMode { none, fixed, estimated };

std::string_view to_string(Basis basis);
Basis parse_basis(std::string_view name);

struct FitOptions {
  Basis basis = Basis::linear;
  NuggetMode nugget_mode = NuggetMode::none;
  double nugget = 0.0;  // tau, used when nugget_mode == fixed
  int restarts = 5;
  double theta_min = 1e-3;
  double theta_max = 1e3;
  double nugget_min = 1e-10;
  double nugget_max = 0.5;
  int max_iterations = 200;
  std::uint64_t seed = 0;
  /// Extra starting point for the likelihood search (normalized-space theta).
  std::optional<Vector> warm_start;
};

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
  bool extrapolated = false;
};

struct BatchPrediction {
  Vector mean;
  Vector variance;
};

/// Fitted ordinary/universal kriging surrogate with Gaussian correlation.
///
/// Inputs are mapped to the unit hypercube and outputs standardized before
/// fitting; `theta`, `beta`, `sigma_z2` and the factorization all live in that
/// internal space. Every prediction-facing function reports original units.
class GpModel {
 public:
  GpModel() = default;

  /// Conditions the process on `data` at fixed hyperparameters (no search).
  /// `theta` is given in normalized-input space.
  static GpModel condition(const TrainingSet& data, Basis basis, const Vector& theta,
                           double nugget = 0.0);

  bool fitted() const { return fitted_; }
  void require_fitted() const;

  std::size_t dim() const { return static_cast<std::size_t>(unit_inputs_.cols()); }
  std::size_t size() const { return static_cast<std::size_t>(unit_inputs_.rows()); }
  std::size_t basis_size() const;

  const Bounds& bounds() const { return bounds_; }
  Basis basis() const { return basis_; }
  const Vector& theta() const { return theta_; }
  double nugget() const { return nugget_; }
  /// Share of the process variance that is signal rather than noise (1 - tau).
  double signal_fraction() const { return 1.0 - nugget_; }
  /// Diagonal jitter that was needed to factorize the correlation matrix.
  double jitter() const { return jitter_; }
  const Vector& beta() const { return beta_; }
  /// Process variance in standardized output units.
  double sigma_z2() const { return sigma_z2_; }
  /// Process variance in original output units.
  double process_variance() const { return sigma_z2_ * output_scale_ * output_scale_; }
  double output_mean() const { return output_mean_; }
  double output_scale() const { return output_scale_; }
  double log_likelihood() const { return log_likelihood_; }
  bool optimizer_converged() const { return optimizer_converged_; }

  const Matrix& unit_inputs() const { return unit_inputs_; }
  const Vector& outputs() const { return outputs_; }
  TrainingSet training() const;

  /// R^{-1} (Y - F beta) in standardized units.
  const Vector& weights() const { return weights_; }
  /// R^{-1} F.
  const Matrix& rinv_f() const { return rinv_f_; }
  /// (F^T R^{-1} F)^{-1}.
  const Matrix& gls_inverse() const { return gls_inverse_; }
  const Eigen::LLT<Matrix>& factor() const { return llt_; }

  /// Regression basis f(u) at a normalized point.
  Vector basis_row(const Vector& unit_point) const;
  /// Signal correlations (1 - tau) r(u) between a normalized point and every training row.
  Vector correlations(const Vector& unit_point) const;

  void set_optimizer_converged(bool converged) { optimizer_converged_ = converged; }

 private:
  bool fitted_ = false;
  Bounds bounds_;
  Basis basis_ = Basis::linear;
  Matrix inputs_;
  Matrix unit_inputs_;
  Vector outputs_;
  Vector std_outputs_;
  double output_mean_ = 0.0;
  double output_scale_ = 1.0;
  Vector theta_;
  double nugget_ = 0.0;
  double jitter_ = 0.0;
  Eigen::LLT<Matrix> llt_;
  Vector beta_;
  Vector weights_;
  Matrix rinv_f_;
  Matrix gls_inverse_;
  double sigma_z2_ = 0.0;
  double log_likelihood_ = 0.0;
  bool optimizer_converged_ = true;
};

/// prod_k exp(-theta_k |x1_k - x2_k|^2). Throws InvalidParameter unless theta > 0.
double gaussian_correlation(const Vector& x1, const Vector& x2, const Vector& theta);

/// Maximum-likelihood fit with beta and sigma_z^2 profiled out in closed form.
/// Throws ConditioningError when no candidate hyperparameter gives a positive
/// definite correlation matrix, FitError when no restart converged.
GpModel fit(const TrainingSet& data, const FitOptions& options = {});

/// Raised when every restart stopped without converging; carries the best model.
class FitError : public Error {
 public:
  FitError(const std::string& what, GpModel best)
      : Error(what), best_(std::move(best)) {}
  const GpModel& best_model() const { return best_; }

 private:
  GpModel best_;
};

/// Concentrated log-likelihood of the standardized data at (theta, tau).
/// Returns -infinity when the correlation matrix is not positive definite.
double log_likelihood(const Vector& theta, double nugget, const TrainingSet& data,
                      Basis basis);

Prediction predict(const GpModel& model, const Vector& x);
BatchPrediction predict_batch(const GpModel& model, const Matrix& points);
Vector predict_mean_batch(const GpModel& model, const Matrix& points);

/// Posterior covariance between two points, original units.
double posterior_covariance(const GpModel& model, const Vector& x1, const Vector& x2);

/// Self-describing JSON record; loading re-factorizes from the stored fields.
std::string to_json(const GpModel& model);
GpModel model_from_json(std::string_view text);

}  // namespace gsax
