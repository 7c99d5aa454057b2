#pragma once

#include "gsax/gp.hpp"

#include <optional>

namespace gsax::detail {

struct NormalizedData {
  Matrix unit;  // inputs mapped to [0, 1]^d
  Vector y;     // standardized outputs
  double y_mean = 0.0;
  double y_scale = 1.0;
};

NormalizedData normalize(const TrainingSet& data);

Matrix basis_matrix(const Matrix& unit, Basis basis);

/// Unit-diagonal Gaussian correlation matrix of the rows of `unit`.
Matrix correlation_matrix(const Matrix& unit, const Vector& theta);

/// (1 - tau) R + tau I.
Matrix apply_nugget(const Matrix& corr, double tau);

/// Cholesky with diagonal jitter escalation 0, 1e-12, ..., 1e-8.
/// Returns the jitter used, or nullopt if every attempt failed.
std::optional<double> factorize(const Matrix& corr, Eigen::LLT<Matrix>& llt);

/// Closed-form GLS profile of the likelihood at fixed correlation.
struct Profile {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
  Vector beta;
  Vector alpha;  // R^{-1}(y - F beta)
  Matrix rinv_f;
  Matrix gls_inverse;
  double sigma2 = 0.0;
  double log_likelihood = 0.0;
};

std::optional<Profile> profile(const Matrix& corr_with_nugget, const Matrix& basis,
                               const Vector& y);

/// Smallest process variance used inside the log-likelihood; keeps the
/// objective finite when the data are reproduced exactly by the basis.
inline constexpr double kSigma2Floor = 1e-15;

}  // namespace gsax::detail
