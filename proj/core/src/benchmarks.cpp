#include "gsax/benchmarks.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace gsax {
namespace {

using std::numbers::pi;

Benchmark finish(Benchmark b) {
  b.analytic_sobol = b.analytic_main_vars / b.analytic_total_var;
  return b;
}

}  // namespace

Benchmark square_exponential(double b_upper) {
  if (b_upper != 2.0 && b_upper != 6.0) {
    throw InvalidParameter("square_exponential: only b = 2 and b = 6 have analytic indices");
  }
  const double a = -2.0;
  const double b = b_upper;
  const double len = b - a;
  const double sqrt2 = std::numbers::sqrt2;

  // y = g(x1) h(x2) with g(x) = x exp(-x^2), h(x) = exp(-x^2).
  const double eg = 0.5 * (std::exp(-a * a) - std::exp(-b * b)) / len;
  const auto g2_antiderivative = [&](double x) {
    return -0.25 * x * std::exp(-2.0 * x * x) + std::sqrt(pi / 2.0) / 8.0 * std::erf(sqrt2 * x);
  };
  const double eg2 = (g2_antiderivative(b) - g2_antiderivative(a)) / len;
  const double eh = 0.5 * std::sqrt(pi) * (std::erf(b) - std::erf(a)) / len;
  const double eh2 = 0.5 * std::sqrt(pi / 2.0) * (std::erf(sqrt2 * b) - std::erf(sqrt2 * a)) / len;

  Benchmark out;
  out.name = b == 2.0 ? "sqexp2" : "sqexp6";
  out.bounds = Bounds::cube(2, a, b);
  out.evaluate = [](const Vector& x) { return x[0] * std::exp(-x[0] * x[0] - x[1] * x[1]); };
  out.analytic_main_vars.resize(2);
  out.analytic_main_vars << eh * eh * (eg2 - eg * eg), eg * eg * (eh2 - eh * eh);
  out.analytic_total_var = eg2 * eh2 - eg * eg * eh * eh;
  return finish(std::move(out));
}

Benchmark ishigami() {
  constexpr double a = 7.0;
  constexpr double b = 0.1;
  const double pi4 = std::pow(pi, 4);
  Benchmark out;
  out.name = "ishigami";
  out.bounds = Bounds::cube(3, -pi, pi);
  out.evaluate = [](const Vector& x) {
    const double s2 = std::sin(x[1]);
    return std::sin(x[0]) + a * s2 * s2 + b * std::pow(x[2], 4) * std::sin(x[0]);
  };
  out.analytic_main_vars.resize(3);
  out.analytic_main_vars << 0.5 * std::pow(1.0 + b * pi4 / 5.0, 2), a * a / 8.0, 0.0;
  out.analytic_total_var = a * a / 8.0 + b * pi4 / 5.0 + b * b * pi4 * pi4 / 18.0 + 0.5;
  return finish(std::move(out));
}

Benchmark g_function() {
  constexpr int d = 5;
  Benchmark out;
  out.name = "gfunction";
  out.bounds = Bounds::cube(d, 0.0, 1.0);
  out.evaluate = [](const Vector& x) {
    double y = 1.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double ak = static_cast<double>(k + 1);
      y *= (std::abs(4.0 * x[k] - 2.0) + ak) / (ak + 1.0);
    }
    return y;
  };
  out.analytic_main_vars.resize(d);
  double prod = 1.0;
  for (int k = 0; k < d; ++k) {
    const double ak = k + 1.0;
    out.analytic_main_vars[k] = 1.0 / (3.0 * (1.0 + ak) * (1.0 + ak));
    prod *= 1.0 + out.analytic_main_vars[k];
  }
  out.analytic_total_var = prod - 1.0;
  return finish(std::move(out));
}

Benchmark gaussian15() {
  static constexpr std::array<double, 15> kA{1.45, 3.3, 15,  50,  55,  58,  59, 100,
                                             102,  112.5, 150, 160, 180, 190, 200};
  Benchmark out;
  out.name = "gaussian15";
  out.bounds = Bounds::cube(kA.size(), -3.0, 3.0);
  out.evaluate = [](const Vector& x) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) s += x[k] * x[k] / kA[static_cast<std::size_t>(k)];
    return std::exp(-s);
  };
  // First and second moments of exp(-x^2/a) under U(-3, 3).
  Vector m1(15);
  Vector m2(15);
  for (std::size_t k = 0; k < kA.size(); ++k) {
    const double a = kA[k];
    m1[static_cast<Eigen::Index>(k)] = std::sqrt(pi * a) * std::erf(3.0 / std::sqrt(a)) / 6.0;
    m2[static_cast<Eigen::Index>(k)] =
        std::sqrt(pi * a / 2.0) * std::erf(3.0 * std::numbers::sqrt2 / std::sqrt(a)) / 6.0;
  }
  const double prod_m1_sq = m1.array().square().prod();
  out.analytic_total_var = m2.prod() - prod_m1_sq;
  out.analytic_main_vars.resize(15);
  for (Eigen::Index k = 0; k < 15; ++k) {
    out.analytic_main_vars[k] = prod_m1_sq / (m1[k] * m1[k]) * (m2[k] - m1[k] * m1[k]);
  }
  return finish(std::move(out));
}

const std::vector<std::string_view>& benchmark_names() {
  static const std::vector<std::string_view> names{"sqexp2", "sqexp6", "ishigami", "gfunction",
                                                   "gaussian15"};
  return names;
}

Benchmark make_benchmark(std::string_view name) {
  if (name == "sqexp2") return square_exponential(2.0);
  if (name == "sqexp6") return square_exponential(6.0);
  if (name == "ishigami") return ishigami();
  if (name == "gfunction") return g_function();
  if (name == "gaussian15") return gaussian15();
  throw UsageError("unknown benchmark '" + std::string(name) + "'");
}

double ratio_error(double s, double y, double d_a, double d_y, int error_case) {
  if (!(d_a >= 0.0) || !(d_y >= 0.0)) throw InvalidParameter("ratio_error: errors must be >= 0");
  switch (error_case) {
    case 1:
      if (!(y - d_y > 0.0)) throw DomainError("ratio_error: Y - dY must be positive");
      return std::abs(-s * d_y + d_a) / (y - d_y);
    case 2:
      return std::abs(s * d_y - d_a) / (y + d_y);
    case 3:
      if (!(y - d_y > 0.0)) throw DomainError("ratio_error: Y - dY must be positive");
      return std::abs(-s * d_y - d_a) / (y - d_y);
    case 4:
      return std::abs(s * d_y + d_a) / (y + d_y);
    default:
      throw InvalidParameter("ratio_error: case must be 1, 2, 3 or 4");
  }
}

Matrix ratio_error_surface(double s, double y, const Vector& d_a, const Vector& d_y,
                           int error_case) {
  Matrix out(d_a.size(), d_y.size());
  for (Eigen::Index r = 0; r < d_a.size(); ++r) {
    for (Eigen::Index c = 0; c < d_y.size(); ++c) {
      out(r, c) = ratio_error(s, y, d_a[r], d_y[c], error_case);
    }
  }
  return out;
}

}  // namespace gsax
