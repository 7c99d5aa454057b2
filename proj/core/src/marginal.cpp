#include "gsax/marginal.hpp"

#include "gp_internal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gsax {
namespace {

void check_kernel_args(double theta, double a, double b) {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw InvalidParameter("kernel integral: theta must be positive");
  }
  if (!(a < b)) throw InvalidParameter("kernel integral: require a < b");
}

/// erf(hi) - erf(lo) for hi >= lo, using erfc when both are in one tail.
double erf_diff(double lo, double hi) {
  if (lo > 0.0) return std::erfc(lo) - std::erfc(hi);
  if (hi < 0.0) return std::erfc(-hi) - std::erfc(-lo);
  return std::erf(hi) - std::erf(lo);
}

}  // namespace

double kernel_integral_1d(double theta, double t, double a, double b) {
  check_kernel_args(theta, a, b);
  const double s = std::sqrt(theta);
  return 0.5 * std::sqrt(std::numbers::pi / theta) * erf_diff(s * (a - t), s * (b - t)) / (b - a);
}

double kernel_integral_2d(double theta, double a, double b) {
  check_kernel_args(theta, a, b);
  const double len = b - a;
  const double x = std::sqrt(theta) * len;
  if (x < 1e-2) {
    // Moments of the triangular difference of two uniforms.
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 30.0 - x2 * x2 * x2 / 168.0;
  }
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  return (sqrt_pi * std::erf(x) / x) - (-std::expm1(-x * x)) / (x * x);
}

Vector uniform_grid(double a, double b, std::size_t n) {
  if (n < 2) throw InvalidParameter("uniform_grid: need at least 2 points");
  if (!(a < b)) throw InvalidParameter("uniform_grid: require a < b");
  Vector g(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    g[static_cast<Eigen::Index>(k)] = a + (b - a) * static_cast<double>(k) / static_cast<double>(n - 1);
  }
  g[static_cast<Eigen::Index>(n - 1)] = b;
  return g;
}

// ---------------------------------------------------------------------------

MarginalProjector::MarginalProjector(const GpModel& model, std::vector<std::size_t> kept)
    : model_(&model), kept_(std::move(kept)) {
  model.require_fitted();
  if (kept_.empty()) throw InvalidParameter("marginalization: kept set is empty");
  std::sort(kept_.begin(), kept_.end());
  if (std::adjacent_find(kept_.begin(), kept_.end()) != kept_.end() ||
      kept_.back() >= model.dim()) {
    throw InvalidParameter("marginalization: kept indices must be distinct and < dim");
  }
  const Matrix& u = model.unit_inputs();
  const Vector& theta = model.theta();
  outer_weight_ = Vector::Ones(u.rows());
  outer_double_ = 1.0;
  std::size_t next = 0;
  for (std::size_t j = 0; j < model.dim(); ++j) {
    if (next < kept_.size() && kept_[next] == j) {
      ++next;
      continue;
    }
    const auto jj = static_cast<Eigen::Index>(j);
    for (Eigen::Index l = 0; l < u.rows(); ++l) {
      outer_weight_[l] *= kernel_integral_1d(theta[jj], u(l, jj), 0.0, 1.0);
    }
    outer_double_ *= kernel_integral_2d(theta[jj], 0.0, 1.0);
  }
  // Noise is independent across points, so only the signal share correlates.
  outer_weight_ *= model.signal_fraction();
  outer_double_ *= model.signal_fraction();
}

Matrix MarginalProjector::unit(const Matrix& points) const {
  if (points.cols() != static_cast<Eigen::Index>(kept_.size())) {
    throw InvalidParameter("marginalization: points need one column per kept input");
  }
  Matrix out(points.rows(), points.cols());
  for (Eigen::Index c = 0; c < points.cols(); ++c) {
    const std::size_t k = kept_[static_cast<std::size_t>(c)];
    const Bounds& b = model_->bounds();
    out.col(c) = (points.col(c).array() - b.lower()[static_cast<Eigen::Index>(k)]) / b.width(k);
  }
  return out;
}

Matrix MarginalProjector::rho(const Matrix& unit_points) const {
  const Matrix& u = model_->unit_inputs();
  const Vector& theta = model_->theta();
  const Eigen::Index n = u.rows();
  const Eigen::Index m = unit_points.rows();
  Matrix r(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index l = 0; l < n; ++l) {
      double s = 0.0;
      for (std::size_t c = 0; c < kept_.size(); ++c) {
        const auto k = static_cast<Eigen::Index>(kept_[c]);
        const double diff = unit_points(j, static_cast<Eigen::Index>(c)) - u(l, k);
        s += theta[k] * diff * diff;
      }
      r(l, j) = std::exp(-s) * outer_weight_[l];
    }
  }
  return r;
}

/// Integrated basis rows f-bar(u), one column per point (p x m).
Matrix MarginalProjector::basis_mean(const Matrix& unit_points) const {
  const Eigen::Index m = unit_points.rows();
  const auto p = static_cast<Eigen::Index>(model_->basis_size());
  Matrix f(p, m);
  f.row(0).setOnes();
  if (model_->basis() == Basis::linear) {
    f.bottomRows(p - 1).setConstant(0.5);
    for (std::size_t c = 0; c < kept_.size(); ++c) {
      f.row(static_cast<Eigen::Index>(kept_[c]) + 1) =
          unit_points.col(static_cast<Eigen::Index>(c)).transpose();
    }
  }
  return f;
}

Vector MarginalProjector::mean(const Matrix& points) const {
  const Matrix up = unit(points);
  Vector out(up.rows());
  constexpr Eigen::Index kChunk = 1024;
  for (Eigen::Index start = 0; start < up.rows(); start += kChunk) {
    const Eigen::Index len = std::min(kChunk, up.rows() - start);
    const Matrix block = up.middleRows(start, len);
    const Vector std_mean = basis_mean(block).transpose() * model_->beta() +
                            rho(block).transpose() * model_->weights();
    out.segment(start, len) =
        (model_->output_mean() + model_->output_scale() * std_mean.array()).matrix();
  }
  return out;
}

double MarginalProjector::mean_at(double x) const {
  if (kept_.size() != 1) throw InvalidParameter("mean_at: requires a single kept input");
  Matrix p(1, 1);
  p(0, 0) = x;
  return mean(p)[0];
}

Matrix MarginalProjector::covariance(const Matrix& points) const {
  const Matrix up = unit(points);
  const Eigen::Index m = up.rows();
  const Matrix r = rho(up);
  const Matrix v = model_->factor().matrixL().solve(r);
  const Matrix t = model_->rinv_f().transpose() * r - basis_mean(up);
  Matrix cov = -(v.transpose() * v);
  cov.noalias() += t.transpose() * (model_->gls_inverse() * t);
  const Vector& theta = model_->theta();
  for (Eigen::Index b = 0; b < m; ++b) {
    for (Eigen::Index a = 0; a < m; ++a) {
      double s = 0.0;
      for (std::size_t c = 0; c < kept_.size(); ++c) {
        const auto k = static_cast<Eigen::Index>(kept_[c]);
        const auto cc = static_cast<Eigen::Index>(c);
        const double diff = up(a, cc) - up(b, cc);
        s += theta[k] * diff * diff;
      }
      cov(a, b) += std::exp(-s) * outer_double_;
    }
  }
  const Matrix sym = (cov + cov.transpose()) * (0.5 * model_->process_variance());
  return sym;
}

Vector MarginalProjector::variance(const Matrix& points) const {
  const Matrix up = unit(points);
  const Matrix r = rho(up);
  const Matrix v = model_->factor().matrixL().solve(r);
  const Matrix t = model_->rinv_f().transpose() * r - basis_mean(up);
  const Matrix gt = model_->gls_inverse() * t;
  Vector out(up.rows());
  for (Eigen::Index j = 0; j < up.rows(); ++j) {
    const double bracket = outer_double_ - v.col(j).squaredNorm() + t.col(j).dot(gt.col(j));
    out[j] = std::max(bracket, 0.0) * model_->process_variance();
  }
  return out;
}

// ---------------------------------------------------------------------------

double psd_factor(const Matrix& cov, double scale, Matrix& factor) {
  const Eigen::Index m = cov.rows();
  if (!(scale > 0.0)) {
    if (cov.cwiseAbs().maxCoeff() == 0.0) {
      factor = Matrix::Zero(m, m);
      return 0.0;
    }
    scale = cov.diagonal().cwiseAbs().maxCoeff();
  }
  static constexpr double kRelative[] = {0.0,   1e-16, 1e-15, 1e-14, 1e-13,
                                         1e-12, 1e-11, 1e-10};
  for (double rel : kRelative) {
    const double jitter = rel * scale;
    Matrix work = cov;
    work.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(work);
    if (llt.info() != Eigen::Success) continue;
    Matrix l = llt.matrixL();
    if (!l.allFinite()) continue;
    factor = std::move(l);
    return jitter;
  }
  throw ConditioningError("main-effect covariance is not positive semidefinite within 1e-10 jitter");
}

Vector main_effect_mean(const GpModel& model, std::size_t i, const Vector& grid) {
  return MarginalProjector(model, {i}).mean(grid);
}

Matrix main_effect_cov(const GpModel& model, std::size_t i, const Vector& grid) {
  return MarginalProjector(model, {i}).covariance(grid);
}

MainEffectGp main_effect(const GpModel& model, std::size_t i, const Vector& grid) {
  const MarginalProjector proj(model, {i});
  const double a = model.bounds().lower()[static_cast<Eigen::Index>(i)];
  const double b = model.bounds().upper()[static_cast<Eigen::Index>(i)];
  const double slack = 1e-12 * (b - a);
  if ((grid.array() < a - slack).any() || (grid.array() > b + slack).any()) {
    throw InvalidParameter("main_effect: grid leaves the input bounds");
  }
  MainEffectGp out;
  out.dim = i;
  out.grid = grid;
  out.mean = proj.mean(grid);
  out.cov = proj.covariance(grid);
  out.variance = out.cov.diagonal().cwiseMax(0.0);
  out.jitter = psd_factor(out.cov, model.process_variance(), out.factor);
  return out;
}

MainEffectGp main_effect(const GpModel& model, std::size_t i, std::size_t n_grid) {
  model.require_fitted();
  if (i >= model.dim()) throw InvalidParameter("main_effect: dimension index out of range");
  const auto k = static_cast<Eigen::Index>(i);
  return main_effect(model, i,
                     uniform_grid(model.bounds().lower()[k], model.bounds().upper()[k], n_grid));
}

InteractionEffectGp interaction_effect(const GpModel& model, std::vector<std::size_t> dims,
                                       const Matrix& points) {
  if (dims.empty()) throw InvalidParameter("interaction_effect: empty index set");
  const MarginalProjector proj(model, dims);
  InteractionEffectGp out;
  out.dims = proj.kept();
  if (out.dims != dims) {
    throw InvalidParameter("interaction_effect: indices must be given in increasing order");
  }
  out.points = points;
  out.mean = proj.mean(points);
  out.cov = proj.covariance(points);
  Matrix unused;
  out.jitter = psd_factor(out.cov, model.process_variance(), unused);
  return out;
}

}  // namespace gsax
