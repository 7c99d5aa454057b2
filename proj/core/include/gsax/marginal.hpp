#pragma once

#include "gsax/gp.hpp"

#include <cstddef>
#include <vector>

namespace gsax {

/// (1/(b-a)) * integral_a^b exp(-theta (x - t)^2) dx.
double kernel_integral_1d(double theta, double t, double a, double b);

/// (1/(b-a))^2 * double integral over [a,b]^2 of exp(-theta (x1 - x2)^2).
double kernel_integral_2d(double theta, double a, double b);

/// n equally spaced points on [a, b], endpoints included.
Vector uniform_grid(double a, double b, std::size_t n);

/// Posterior of a GP after integrating out every input outside a kept set,
/// with independent uniform inputs. Works in original units on the kept
/// coordinates; all other inputs are averaged over their bounds.
class MarginalProjector {
 public:
  MarginalProjector(const GpModel& model, std::vector<std::size_t> kept);

  const std::vector<std::size_t>& kept() const { return kept_; }

  /// Mean at each row of `points` (m x |kept|).
  Vector mean(const Matrix& points) const;
  /// Mean for a single kept dimension; only valid when |kept| == 1.
  double mean_at(double x) const;

  /// Symmetric posterior covariance between rows of `points`, before any
  /// positive-semidefinite repair.
  Matrix covariance(const Matrix& points) const;
  /// Diagonal of covariance(points), clamped at zero.
  Vector variance(const Matrix& points) const;

 private:
  /// Marginalized correlation vectors, one column per point (n x m).
  Matrix rho(const Matrix& unit_points) const;
  Matrix unit(const Matrix& points) const;
  Matrix basis_mean(const Matrix& unit_points) const;

  const GpModel* model_;
  std::vector<std::size_t> kept_;
  Vector outer_weight_;  // product of 1-d integrals over dropped inputs, per training row
  double outer_double_ = 1.0;
};

struct MainEffectGp {
  std::size_t dim = 0;
  Vector grid;  // original units
  Vector mean;
  Matrix cov;
  Vector variance;  // diag(cov), clamped at zero
  /// Lower Cholesky factor of cov + jitter * I.
  Matrix factor;
  double jitter = 0.0;
};

struct InteractionEffectGp {
  std::vector<std::size_t> dims;
  Matrix points;  // m x |dims|, original units
  Vector mean;
  Matrix cov;
  double jitter = 0.0;
};

Vector main_effect_mean(const GpModel& model, std::size_t i, const Vector& grid);
Matrix main_effect_cov(const GpModel& model, std::size_t i, const Vector& grid);

/// Main-effect mean and covariance on `grid`, with the covariance factorized
/// after the smallest diagonal jitter (up to 1e-10 times the process variance)
/// that makes it positive definite. Throws ConditioningError otherwise.
MainEffectGp main_effect(const GpModel& model, std::size_t i, const Vector& grid);
MainEffectGp main_effect(const GpModel& model, std::size_t i, std::size_t n_grid = 128);

InteractionEffectGp interaction_effect(const GpModel& model, std::vector<std::size_t> dims,
                                       const Matrix& points);

/// Lower factor of `cov` with escalating jitter relative to `scale`; returns
/// the jitter used. Throws ConditioningError if 1e-10 * scale is not enough.
double psd_factor(const Matrix& cov, double scale, Matrix& factor);

}  // namespace gsax
