#include "gsax/gp.hpp"

#include "gp_internal.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace gsax {

// ---------------------------------------------------------------------------
// Bounds / TrainingSet

Bounds::Bounds(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() == 0 || lower_.size() != upper_.size()) {
    throw InvalidParameter("Bounds: lower and upper must be non-empty and equally sized");
  }
  for (Eigen::Index k = 0; k < lower_.size(); ++k) {
    if (!(lower_[k] < upper_[k]) || !std::isfinite(lower_[k]) || !std::isfinite(upper_[k])) {
      throw InvalidParameter("Bounds: require finite lower < upper in every dimension");
    }
  }
}

Bounds Bounds::cube(std::size_t dim, double lower, double upper) {
  return Bounds(Vector::Constant(static_cast<Eigen::Index>(dim), lower),
                Vector::Constant(static_cast<Eigen::Index>(dim), upper));
}

bool Bounds::contains(const Vector& x, double tol) const {
  if (x.size() != lower_.size()) return false;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double slack = tol * (upper_[k] - lower_[k]);
    if (!(x[k] >= lower_[k] - slack && x[k] <= upper_[k] + slack)) return false;
  }
  return true;
}

Vector Bounds::to_unit(const Vector& x) const {
  return ((x - lower_).array() / (upper_ - lower_).array()).matrix();
}

Vector Bounds::from_unit(const Vector& u) const {
  return (lower_.array() + u.array() * (upper_ - lower_).array()).matrix();
}

void TrainingSet::validate(double duplicate_tol) const {
  if (inputs.rows() != outputs.size()) {
    throw InvalidParameter("TrainingSet: inputs and outputs disagree in length");
  }
  if (inputs.cols() != static_cast<Eigen::Index>(bounds.dim())) {
    throw InvalidParameter("TrainingSet: input dimension does not match bounds");
  }
  if (inputs.rows() < 2) {
    throw InvalidParameter("TrainingSet: at least two samples are required");
  }
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    if (!bounds.contains(inputs.row(i).transpose(), 1e-12)) {
      throw InvalidParameter("TrainingSet: sample " + std::to_string(i) + " lies outside bounds");
    }
    if (!std::isfinite(outputs[i])) {
      throw InvalidParameter("TrainingSet: output " + std::to_string(i) + " is not finite");
    }
  }
  const Vector width = bounds.upper() - bounds.lower();
  for (Eigen::Index i = 1; i < inputs.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      const double gap =
          ((inputs.row(i) - inputs.row(j)).transpose().array() / width.array()).abs().maxCoeff();
      if (gap <= duplicate_tol) {
        throw InvalidParameter("TrainingSet: samples " + std::to_string(j) + " and " +
                               std::to_string(i) + " are duplicates");
      }
    }
  }
}

std::optional<std::size_t> TrainingSet::find_duplicate(const Vector& x, double tol) const {
  const Vector width = bounds.upper() - bounds.lower();
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    const double gap = ((inputs.row(i).transpose() - x).array() / width.array()).abs().maxCoeff();
    if (gap <= tol) return static_cast<std::size_t>(i);
  }
  return std::nullopt;
}

void TrainingSet::append(const Vector& x, double y) {
  const Eigen::Index n = inputs.rows();
  if (n > 0 && x.size() != inputs.cols()) {
    throw InvalidParameter("TrainingSet::append: dimension mismatch");
  }
  inputs.conservativeResize(n + 1, x.size());
  inputs.row(n) = x.transpose();
  outputs.conservativeResize(n + 1);
  outputs[n] = y;
}

TrainingSet deduplicate(const TrainingSet& data, double tol) {
  TrainingSet out;
  out.bounds = data.bounds;
  out.inputs.resize(0, data.inputs.cols());
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    const Vector x = data.inputs.row(i).transpose();
    if (out.size() == 0 || !out.find_duplicate(x, tol)) out.append(x, data.outputs[i]);
  }
  return out;
}

std::string_view to_string(Basis basis) {
  return basis == Basis::constant ? "constant" : "linear";
}

Basis parse_basis(std::string_view name) {
  if (name == "constant") return Basis::constant;
  if (name == "linear") return Basis::linear;
  throw UsageError("unknown basis '" + std::string(name) + "'");
}

double gaussian_correlation(const Vector& x1, const Vector& x2, const Vector& theta) {
  if (x1.size() != x2.size() || x1.size() != theta.size()) {
    throw InvalidParameter("gaussian_correlation: dimension mismatch");
  }
  if ((theta.array() <= 0.0).any() || !theta.allFinite()) {
    throw InvalidParameter("gaussian_correlation: theta must be positive");
  }
  double s = 0.0;
  for (Eigen::Index k = 0; k < x1.size(); ++k) {
    const double diff = x1[k] - x2[k];
    s += theta[k] * diff * diff;
  }
  return std::exp(-s);
}

// ---------------------------------------------------------------------------
// Internals

namespace detail {

NormalizedData normalize(const TrainingSet& data) {
  NormalizedData out;
  const Eigen::Index n = data.inputs.rows();
  out.unit.resize(n, data.inputs.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    out.unit.row(i) = data.bounds.to_unit(data.inputs.row(i).transpose()).transpose();
  }
  out.y_mean = data.outputs.mean();
  const double ss = (data.outputs.array() - out.y_mean).square().sum();
  double scale = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
  if (!(scale > 0.0) || !std::isfinite(scale)) scale = 1.0;
  out.y_scale = scale;
  out.y = ((data.outputs.array() - out.y_mean) / scale).matrix();
  return out;
}

Matrix basis_matrix(const Matrix& unit, Basis basis) {
  const Eigen::Index n = unit.rows();
  if (basis == Basis::constant) return Matrix::Ones(n, 1);
  Matrix f(n, unit.cols() + 1);
  f.col(0).setOnes();
  f.rightCols(unit.cols()) = unit;
  return f;
}

Matrix correlation_matrix(const Matrix& unit, const Vector& theta) {
  const Eigen::Index n = unit.rows();
  const Eigen::Index d = unit.cols();
  Matrix r(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    r(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = unit(i, k) - unit(j, k);
        s += theta[k] * diff * diff;
      }
      const double v = std::exp(-s);
      r(i, j) = v;
      r(j, i) = v;
    }
  }
  return r;
}

Matrix apply_nugget(const Matrix& corr, double tau) {
  if (tau == 0.0) return corr;
  Matrix out = (1.0 - tau) * corr;
  out.diagonal().array() += tau;
  return out;
}

std::optional<double> factorize(const Matrix& corr, Eigen::LLT<Matrix>& llt) {
  static constexpr double kJitters[] = {0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8};
  // Reject factorizations whose reciprocal condition estimate is below what
  // double precision can resolve.
  static constexpr double kMinRcond = 1e-15;
  for (double jitter : kJitters) {
    if (jitter == 0.0) {
      llt.compute(corr);
    } else {
      Matrix jittered = corr;
      jittered.diagonal().array() += jitter;
      llt.compute(jittered);
    }
    if (llt.info() != Eigen::Success) continue;
    const auto diag = llt.matrixLLT().diagonal();
    if (!diag.allFinite() || (diag.array() <= 0.0).any()) continue;
    if (llt.rcond() < kMinRcond) continue;
    return jitter;
  }
  return std::nullopt;
}

std::optional<Profile> profile(const Matrix& corr_with_nugget, const Matrix& basis,
                               const Vector& y) {
  Profile p;
  const auto jitter = factorize(corr_with_nugget, p.llt);
  if (!jitter) return std::nullopt;
  p.jitter = *jitter;

  const double n = static_cast<double>(y.size());
  p.rinv_f = p.llt.solve(basis);
  const Matrix ftrf = basis.transpose() * p.rinv_f;
  Eigen::LLT<Matrix> gls(ftrf);
  if (gls.info() != Eigen::Success) return std::nullopt;
  p.beta = gls.solve(p.rinv_f.transpose() * y);
  p.gls_inverse = gls.solve(Matrix::Identity(ftrf.rows(), ftrf.cols()));
  const Vector resid = y - basis * p.beta;
  p.alpha = p.llt.solve(resid);
  p.sigma2 = std::max(resid.dot(p.alpha) / n, 0.0);
  if (!std::isfinite(p.sigma2) || !p.alpha.allFinite()) return std::nullopt;

  const double log_det = 2.0 * p.llt.matrixLLT().diagonal().array().log().sum();
  const double s2 = std::max(p.sigma2, kSigma2Floor);
  p.log_likelihood = -0.5 * (n * std::log(2.0 * std::numbers::pi * s2) + log_det + n);
  return p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// GpModel

GpModel GpModel::condition(const TrainingSet& data, Basis basis, const Vector& theta,
                           double nugget) {
  data.validate();
  if (theta.size() != static_cast<Eigen::Index>(data.dim()) || (theta.array() <= 0.0).any() ||
      !theta.allFinite()) {
    throw InvalidParameter("GpModel::condition: theta must be positive with one entry per input");
  }
  if (!(nugget >= 0.0 && nugget < 1.0)) {
    throw InvalidParameter("GpModel::condition: nugget must lie in [0, 1)");
  }
  const std::size_t p = basis == Basis::constant ? 1 : data.dim() + 1;
  if (data.size() < p + 1) {
    throw InvalidParameter("GpModel::condition: need at least basis size + 1 samples");
  }

  auto norm = detail::normalize(data);
  const Matrix f = detail::basis_matrix(norm.unit, basis);
  const Matrix corr = detail::apply_nugget(detail::correlation_matrix(norm.unit, theta), nugget);
  auto prof = detail::profile(corr, f, norm.y);
  if (!prof) {
    throw ConditioningError(
        "correlation matrix is not positive definite after jitter escalation to 1e-8");
  }

  GpModel m;
  m.fitted_ = true;
  m.bounds_ = data.bounds;
  m.basis_ = basis;
  m.inputs_ = data.inputs;
  m.unit_inputs_ = std::move(norm.unit);
  m.outputs_ = data.outputs;
  m.std_outputs_ = std::move(norm.y);
  m.output_mean_ = norm.y_mean;
  m.output_scale_ = norm.y_scale;
  m.theta_ = theta;
  m.nugget_ = nugget;
  m.jitter_ = prof->jitter;
  m.llt_ = std::move(prof->llt);
  m.beta_ = std::move(prof->beta);
  m.weights_ = std::move(prof->alpha);
  m.rinv_f_ = std::move(prof->rinv_f);
  m.gls_inverse_ = std::move(prof->gls_inverse);
  m.sigma_z2_ = prof->sigma2;
  m.log_likelihood_ = prof->log_likelihood;
  return m;
}

void GpModel::require_fitted() const {
  if (!fitted_) throw StateError("GP model has not been fitted");
}

std::size_t GpModel::basis_size() const {
  return basis_ == Basis::constant ? 1 : dim() + 1;
}

TrainingSet GpModel::training() const {
  require_fitted();
  return TrainingSet{inputs_, outputs_, bounds_};
}

Vector GpModel::basis_row(const Vector& unit_point) const {
  Vector f(basis_size());
  f[0] = 1.0;
  if (basis_ == Basis::linear) f.tail(unit_point.size()) = unit_point;
  return f;
}

Vector GpModel::correlations(const Vector& unit_point) const {
  const Eigen::Index n = unit_inputs_.rows();
  const Eigen::Index d = unit_inputs_.cols();
  Vector r(n);
  for (Eigen::Index l = 0; l < n; ++l) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < d; ++k) {
      const double diff = unit_point[k] - unit_inputs_(l, k);
      s += theta_[k] * diff * diff;
    }
    r[l] = std::exp(-s);
  }
  return r * signal_fraction();
}

double log_likelihood(const Vector& theta, double nugget, const TrainingSet& data, Basis basis) {
  if (theta.size() != static_cast<Eigen::Index>(data.dim()) || (theta.array() <= 0.0).any()) {
    throw InvalidParameter("log_likelihood: theta must be positive with one entry per input");
  }
  const auto norm = detail::normalize(data);
  const Matrix f = detail::basis_matrix(norm.unit, basis);
  const Matrix corr = detail::apply_nugget(detail::correlation_matrix(norm.unit, theta), nugget);
  const auto prof = detail::profile(corr, f, norm.y);
  if (!prof) return -std::numeric_limits<double>::infinity();
  return prof->log_likelihood;
}

// ---------------------------------------------------------------------------
// Prediction

namespace {

constexpr Eigen::Index kChunk = 1024;

/// Clamps a standardized-variance bracket (1 - r'R^-1 r + t'Gt) at zero.
double clamp_bracket(double bracket) {
  if (bracket < -1e-10) {
    throw ConditioningError("posterior variance is negative beyond round-off (" +
                            std::to_string(bracket) + " sigma_z^2)");
  }
  return std::max(bracket, 0.0);
}

/// Correlations between every training row and each row of `unit_points`: n x m.
Matrix cross_correlations(const GpModel& model, const Matrix& unit_points) {
  const Matrix& u = model.unit_inputs();
  const Vector& theta = model.theta();
  const Eigen::Index n = u.rows();
  const Eigen::Index d = u.cols();
  const Eigen::Index m = unit_points.rows();
  Matrix r(n, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    for (Eigen::Index l = 0; l < n; ++l) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) {
        const double diff = unit_points(j, k) - u(l, k);
        s += theta[k] * diff * diff;
      }
      r(l, j) = std::exp(-s);
    }
  }
  return r * model.signal_fraction();
}

Matrix to_unit_rows(const GpModel& model, const Matrix& points) {
  if (points.cols() != static_cast<Eigen::Index>(model.dim())) {
    throw InvalidParameter("prediction points have the wrong dimension");
  }
  const Bounds& b = model.bounds();
  Matrix u(points.rows(), points.cols());
  for (Eigen::Index k = 0; k < points.cols(); ++k) {
    u.col(k) = (points.col(k).array() - b.lower()[k]) / b.width(static_cast<std::size_t>(k));
  }
  return u;
}

Matrix basis_rows(const GpModel& model, const Matrix& unit_points) {
  return detail::basis_matrix(unit_points, model.basis());
}

}  // namespace

Prediction predict(const GpModel& model, const Vector& x) {
  model.require_fitted();
  if (x.size() != static_cast<Eigen::Index>(model.dim())) {
    throw InvalidParameter("predict: point has the wrong dimension");
  }
  const Vector u = model.bounds().to_unit(x);
  const Vector r = model.correlations(u);
  const Vector f = model.basis_row(u);

  Prediction out;
  out.extrapolated = !model.bounds().contains(x, 1e-12);
  const double mean_std = f.dot(model.beta()) + r.dot(model.weights());
  const Vector v = model.factor().matrixL().solve(r);
  const Vector t = model.rinv_f().transpose() * r - f;
  const double bracket =
      model.signal_fraction() - v.squaredNorm() + t.dot(model.gls_inverse() * t);
  out.mean = model.output_mean() + model.output_scale() * mean_std;
  out.variance = model.process_variance() * clamp_bracket(bracket);
  return out;
}

BatchPrediction predict_batch(const GpModel& model, const Matrix& points) {
  model.require_fitted();
  const Matrix unit = to_unit_rows(model, points);
  const Eigen::Index m = unit.rows();
  BatchPrediction out;
  out.mean.resize(m);
  out.variance.resize(m);
  const double scale = model.output_scale();
  for (Eigen::Index start = 0; start < m; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, m - start);
    const Matrix block = unit.middleRows(start, len);
    const Matrix r = cross_correlations(model, block);
    const Matrix f = basis_rows(model, block);
    const Vector mean_std = f * model.beta() + r.transpose() * model.weights();
    const Matrix v = model.factor().matrixL().solve(r);
    const Matrix t = model.rinv_f().transpose() * r - f.transpose();
    const Matrix gt = model.gls_inverse() * t;
    for (Eigen::Index j = 0; j < len; ++j) {
      const double bracket =
          model.signal_fraction() - v.col(j).squaredNorm() + t.col(j).dot(gt.col(j));
      out.mean[start + j] = model.output_mean() + scale * mean_std[j];
      out.variance[start + j] = model.process_variance() * clamp_bracket(bracket);
    }
  }
  return out;
}

Vector predict_mean_batch(const GpModel& model, const Matrix& points) {
  model.require_fitted();
  const Matrix unit = to_unit_rows(model, points);
  const Eigen::Index m = unit.rows();
  Vector out(m);
  for (Eigen::Index start = 0; start < m; start += kChunk) {
    const Eigen::Index len = std::min(kChunk, m - start);
    const Matrix block = unit.middleRows(start, len);
    const Matrix r = cross_correlations(model, block);
    const Matrix f = basis_rows(model, block);
    out.segment(start, len) = (model.output_mean() +
                               model.output_scale() *
                                   (f * model.beta() + r.transpose() * model.weights()).array())
                                  .matrix();
  }
  return out;
}

double posterior_covariance(const GpModel& model, const Vector& x1, const Vector& x2) {
  model.require_fitted();
  const Vector u1 = model.bounds().to_unit(x1);
  const Vector u2 = model.bounds().to_unit(x2);
  const Vector r1 = model.correlations(u1);
  const Vector r2 = model.correlations(u2);
  const Vector v1 = model.factor().matrixL().solve(r1);
  const Vector v2 = model.factor().matrixL().solve(r2);
  const Vector t1 = model.rinv_f().transpose() * r1 - model.basis_row(u1);
  const Vector t2 = model.rinv_f().transpose() * r2 - model.basis_row(u2);
  double prior = 0.0;
  for (Eigen::Index k = 0; k < u1.size(); ++k) {
    const double diff = u1[k] - u2[k];
    prior += model.theta()[k] * diff * diff;
  }
  const double bracket = model.signal_fraction() * std::exp(-prior) - v1.dot(v2) +
                         t1.dot(model.gls_inverse() * t2);
  return model.process_variance() * bracket;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using nlohmann::json;

json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector json_vector(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string to_json(const GpModel& model) {
  model.require_fitted();
  json rows = json::array();
  const TrainingSet data = model.training();
  for (Eigen::Index i = 0; i < data.inputs.rows(); ++i) {
    rows.push_back(vector_json(data.inputs.row(i).transpose()));
  }
  json j;
  j["format"] = "gsax-gp";
  j["version"] = 1;
  j["kernel"] = "gaussian";
  j["basis"] = std::string(to_string(model.basis()));
  j["theta"] = vector_json(model.theta());
  j["nugget"] = model.nugget();
  j["jitter"] = model.jitter();
  j["beta"] = vector_json(model.beta());
  j["sigma_z2"] = model.sigma_z2();
  j["log_likelihood"] = model.log_likelihood();
  j["optimizer_converged"] = model.optimizer_converged();
  j["normalization"] = {{"input_lower", vector_json(model.bounds().lower())},
                        {"input_upper", vector_json(model.bounds().upper())},
                        {"output_mean", model.output_mean()},
                        {"output_scale", model.output_scale()}};
  j["training"] = {{"inputs", rows}, {"outputs", vector_json(data.outputs)}};
  return j.dump(2);
}

GpModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("model_from_json: ") + e.what());
  }
  if (j.value("format", "") != "gsax-gp" || j.value("version", 0) != 1) {
    throw InvalidParameter("model_from_json: not a gsax-gp v1 record");
  }
  try {
    const auto& norm = j.at("normalization");
    TrainingSet data;
    data.bounds = Bounds(json_vector(norm.at("input_lower")), json_vector(norm.at("input_upper")));
    const auto& rows = j.at("training").at("inputs");
    data.inputs.resize(static_cast<Eigen::Index>(rows.size()),
                       static_cast<Eigen::Index>(data.bounds.dim()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      data.inputs.row(static_cast<Eigen::Index>(i)) = json_vector(rows[i]).transpose();
    }
    data.outputs = json_vector(j.at("training").at("outputs"));
    GpModel m = GpModel::condition(data, parse_basis(j.at("basis").get<std::string>()),
                                   json_vector(j.at("theta")), j.at("nugget").get<double>());
    m.set_optimizer_converged(j.value("optimizer_converged", true));
    return m;
  } catch (const json::exception& e) {
    throw InvalidParameter(std::string("model_from_json: ") + e.what());
  }
}

}  // namespace gsax
