#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gsax/benchmarks.hpp"
#include "gsax/error.hpp"
#include "gsax/marginal.hpp"

#include "oracles.hpp"

#include <cmath>
#include <numbers>

using gsax::Matrix;
using gsax::Vector;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

gsax::GpModel fitted(const gsax::Benchmark& b, std::size_t n, std::uint64_t seed) {
  gsax::FitOptions opt;
  opt.seed = seed;
  try {
    return gsax::fit(oracle::lhs_training(b, n, seed), opt);
  } catch (const gsax::FitError& e) {
    return e.best_model();
  }
}

Matrix column(const Vector& v) { return v; }

}  // namespace

TEST_CASE("1-d kernel integral") {
  CHECK(gsax::kernel_integral_1d(1e-10, 0.5, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-6));

  const double theta = 3.0, a = -1.0, b = 2.0;
  const double mid = 0.5 * (a + b);
  const double symmetric = std::sqrt(std::numbers::pi / theta) / (b - a) *
                           (2.0 * phi(std::sqrt(2.0 * theta) * (b - a) / 2.0) - 1.0);
  CHECK(gsax::kernel_integral_1d(theta, mid, a, b) == doctest::Approx(symmetric).epsilon(1e-14));

  const double ref = oracle::quad([](double x) { return std::exp(-2.0 * (x - 0.3) * (x - 0.3)); }, 0, 1);
  CHECK(std::abs(gsax::kernel_integral_1d(2.0, 0.3, 0.0, 1.0) - ref) <= 1e-12);

  CHECK_THROWS_AS(gsax::kernel_integral_1d(0.0, 0.5, 0.0, 1.0), gsax::InvalidParameter);
  CHECK_THROWS_AS(gsax::kernel_integral_1d(-1.0, 0.5, 0.0, 1.0), gsax::InvalidParameter);
  CHECK_THROWS_AS(gsax::kernel_integral_1d(1.0, 0.5, 1.0, 1.0), gsax::InvalidParameter);
  CHECK_THROWS_AS(gsax::kernel_integral_1d(1.0, 0.5, 2.0, 1.0), gsax::InvalidParameter);
}

TEST_CASE("2-d kernel integral") {
  CHECK(gsax::kernel_integral_2d(1e-8, 0.0, 1.0) == doctest::Approx(1.0).epsilon(1e-4));
  for (double theta : {0.01, 1.0, 50.0}) {
    CHECK(std::abs(gsax::kernel_integral_2d(theta, 0.0, 1.0) -
                   gsax::kernel_integral_2d(theta, 5.0, 6.0)) <= 1e-12);
  }
  const double ref =
      oracle::quad2([](double x, double y) { return std::exp(-1.5 * (x - y) * (x - y)); }, 0, 1);
  CHECK(std::abs(gsax::kernel_integral_2d(1.5, 0.0, 1.0) - ref) <= 1e-10);
  CHECK_THROWS_AS(gsax::kernel_integral_2d(0.0, 0.0, 1.0), gsax::InvalidParameter);
  CHECK_THROWS_AS(gsax::kernel_integral_2d(1.0, 1.0, 0.0), gsax::InvalidParameter);
}

TEST_CASE("kernel integrals match quadrature over a parameter sweep") {
  const std::pair<double, double> ranges[] = {{0.0, 1.0}, {-2.0, 6.0}, {-std::numbers::pi, std::numbers::pi}};
  for (double theta : {0.01, 0.1, 1.0, 10.0, 100.0}) {
    for (auto [a, b] : ranges) {
      CAPTURE(theta);
      CAPTURE(a);
      for (int k = 1; k <= 5; ++k) {
        const double t = a + (b - a) * k / 6.0;
        const double ref =
            oracle::quad([&](double x) { return std::exp(-theta * (x - t) * (x - t)); }, a, b) / (b - a);
        CHECK(std::abs(gsax::kernel_integral_1d(theta, t, a, b) - ref) <= 1e-10);
      }
      const double ref2 =
          oracle::quad2([&](double x, double y) { return std::exp(-theta * (x - y) * (x - y)); }, a, b) /
          ((b - a) * (b - a));
      const double v = gsax::kernel_integral_2d(theta, a, b);
      CHECK(std::abs(v - ref2) <= 1e-8);
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("uniform grid includes both endpoints") {
  const Vector g = gsax::uniform_grid(-1.0, 3.0, 5);
  REQUIRE(g.size() == 5);
  CHECK(g[0] == -1.0);
  CHECK(g[2] == doctest::Approx(1.0));
  CHECK(g[4] == 3.0);
}

TEST_CASE("one input: main effect equals the full posterior") {
  const auto b = gsax::square_exponential(2.0);
  gsax::TrainingSet data;
  data.bounds = gsax::Bounds::cube(1, -2.0, 2.0);
  data.inputs.resize(7, 1);
  data.outputs.resize(7);
  for (Eigen::Index i = 0; i < 7; ++i) {
    data.inputs(i, 0) = -1.9 + 0.6 * static_cast<double>(i);
    data.outputs[i] = std::exp(data.inputs(i, 0)) * std::sin(2.0 * data.inputs(i, 0));
  }
  gsax::FitOptions opt;
  gsax::GpModel m;
  try {
    m = gsax::fit(data, opt);
  } catch (const gsax::FitError& e) {
    m = e.best_model();
  }
  const Vector grid = gsax::uniform_grid(-2.0, 2.0, 25);
  const Vector mean = gsax::main_effect_mean(m, 0, grid);
  const Matrix cov = gsax::main_effect_cov(m, 0, grid);
  const auto full = gsax::predict_batch(m, column(grid));
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    CHECK(std::abs(mean[i] - full.mean[i]) <= 1e-8);
    for (Eigen::Index j = 0; j < grid.size(); ++j) {
      const double ref = gsax::posterior_covariance(m, grid.segment(i, 1), grid.segment(j, 1));
      CHECK(std::abs(cov(i, j) - ref) <= 1e-8);
    }
  }
}

TEST_CASE("reduction chain for interaction effects") {
  const auto b = gsax::ishigami();
  const auto m = fitted(b, 40, 3);
  gsax::Rng rng = gsax::make_rng(11);
  const Matrix pts = gsax::uniform_sample(12, b.bounds, rng);

  SUBCASE("nothing marginalized gives the full posterior") {
    const auto eff = gsax::interaction_effect(m, {0, 1, 2}, pts);
    const auto full = gsax::predict_batch(m, pts);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      CHECK(std::abs(eff.mean[i] - full.mean[i]) <= 1e-8 * (1.0 + std::abs(full.mean[i])));
      for (Eigen::Index j = 0; j < pts.rows(); ++j) {
        const double ref =
            gsax::posterior_covariance(m, pts.row(i).transpose(), pts.row(j).transpose());
        CHECK(std::abs(eff.cov(i, j) - ref) <= 1e-8 * (1.0 + m.process_variance()));
      }
    }
  }
  SUBCASE("single input gives the main effect") {
    for (std::size_t i = 0; i < 3; ++i) {
      const Vector grid = gsax::uniform_grid(-std::numbers::pi, std::numbers::pi, 16);
      const auto eff = gsax::interaction_effect(m, {i}, column(grid));
      const Vector mean = gsax::main_effect_mean(m, i, grid);
      const Matrix cov = gsax::main_effect_cov(m, i, grid);
      CHECK((eff.mean - mean).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((eff.cov - cov).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
  SUBCASE("invalid sets") {
    CHECK_THROWS_AS(gsax::interaction_effect(m, {}, pts), gsax::InvalidParameter);
    CHECK_THROWS_AS(gsax::interaction_effect(m, {3}, pts.leftCols(1)), gsax::InvalidParameter);
    CHECK_THROWS_AS(gsax::main_effect_mean(m, 5, Vector::Zero(3)), gsax::InvalidParameter);
  }
}

TEST_CASE("constant training data gives a constant main effect") {
  gsax::TrainingSet data;
  data.bounds = gsax::Bounds::cube(2, 0.0, 1.0);
  data.inputs = gsax::lhs_sample(10, data.bounds, 2);
  data.outputs = Vector::Constant(10, 4.25);
  gsax::GpModel m;
  try {
    m = gsax::fit(data);
  } catch (const gsax::FitError& e) {
    m = e.best_model();
  }
  const Vector grid = gsax::uniform_grid(0.0, 1.0, 9);
  for (std::size_t i = 0; i < 2; ++i) {
    const Vector mean = gsax::main_effect_mean(m, i, grid);
    CHECK((mean.array() - 4.25).abs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("unfitted model is rejected") {
  const gsax::GpModel m;
  CHECK_THROWS_AS(gsax::main_effect_mean(m, 0, Vector::Zero(2)), gsax::StateError);
}

TEST_CASE("main-effect mean agrees with Monte Carlo marginalization") {
  const auto b = gsax::ishigami();
  const auto m = fitted(b, 100, 8);
  const Vector grid = gsax::uniform_grid(-std::numbers::pi, std::numbers::pi, 9);
  const Vector mean = gsax::main_effect_mean(m, 0, grid);
  gsax::Rng rng = gsax::make_rng(99);
  const Eigen::Index n_mc = 100000;
  Matrix pts = gsax::uniform_sample(static_cast<std::size_t>(n_mc), b.bounds, rng);
  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    pts.col(0).setConstant(grid[g]);
    const auto ms = oracle::mean_se(gsax::predict_mean_batch(m, pts));
    CAPTURE(g);
    CHECK(std::abs(mean[g] - ms.mean) <= 3.0 * ms.se);
  }
}

TEST_CASE("pair interaction mean agrees with Monte Carlo marginalization") {
  const auto b = gsax::ishigami();
  const auto m = fitted(b, 100, 8);
  gsax::Rng rng = gsax::make_rng(5);
  const Matrix at = gsax::uniform_sample(6, b.bounds, rng);
  const auto eff = gsax::interaction_effect(m, {0, 1}, at.leftCols(2));
  Matrix pts = gsax::uniform_sample(100000, b.bounds, rng);
  for (Eigen::Index g = 0; g < at.rows(); ++g) {
    pts.col(0).setConstant(at(g, 0));
    pts.col(1).setConstant(at(g, 1));
    const auto ms = oracle::mean_se(gsax::predict_mean_batch(m, pts));
    CAPTURE(g);
    CHECK(std::abs(eff.mean[g] - ms.mean) <= 3.0 * ms.se);
  }
}

TEST_CASE("main-effect covariance agrees with double Monte Carlo marginalization") {
  const auto b = gsax::square_exponential(2.0);
  const auto m = fitted(b, 20, 6);
  const Vector grid = gsax::uniform_grid(-2.0, 2.0, 16);
  const Matrix cov = gsax::main_effect_cov(m, 1, grid);
  gsax::Rng rng = gsax::make_rng(17);
  const std::pair<int, int> entries[] = {{0, 0}, {5, 5}, {15, 15}, {3, 4}, {2, 12}, {7, 8}};
  const int n_mc = 100000;
  for (auto [i, j] : entries) {
    Vector samples(n_mc);
    for (int k = 0; k < n_mc; ++k) {
      Vector x1(2), x2(2);
      x1 << -2.0 + 4.0 * gsax::uniform01(rng), grid[i];
      x2 << -2.0 + 4.0 * gsax::uniform01(rng), grid[j];
      samples[k] = gsax::posterior_covariance(m, x1, x2);
    }
    const auto ms = oracle::mean_se(samples);
    CAPTURE(i);
    CAPTURE(j);
    CHECK(std::abs(cov(i, j) - ms.mean) <= 3.0 * ms.se + 1e-12 * m.process_variance());
  }
}

TEST_CASE("main-effect factor reconstructs the jittered covariance") {
  const auto b = gsax::ishigami();
  const auto m = fitted(b, 60, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto eff = gsax::main_effect(m, i, 64);
    CHECK(eff.grid.size() == 64);
    CHECK((eff.cov - eff.cov.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(eff.jitter <= 1e-10 * m.process_variance());
    const Matrix l = eff.factor.triangularView<Eigen::Lower>();
    const Matrix target = eff.cov + eff.jitter * Matrix::Identity(64, 64);
    CHECK((l * l.transpose() - target).norm() <= 1e-8);
    CHECK(eff.variance.minCoeff() >= 0.0);
    for (Eigen::Index k = 0; k < 64; ++k) CHECK(l(k, k) * l(k, k) >= 0.0);
  }
}

TEST_CASE("noisy model marginal mean matches a quadrature reference") {
  const auto b = gsax::square_exponential(2.0);
  const auto data = oracle::lhs_training(b, 12, 21);
  Vector theta(2);
  theta << 1.5, 4.0;
  const double tau = 0.1;
  const auto m = gsax::GpModel::condition(data, gsax::Basis::linear, theta, tau);
  const double x = 0.7;
  const double u = (x + 2.0) / 4.0;

  // Mean of the predictor over the dropped input, by quadrature of the full mean.
  const double ref = oracle::quad(
      [&](double z) {
        Vector p(2);
        p << z, x;
        return gsax::predict(m, p).mean;
      },
      -2.0, 2.0) / 4.0;
  CHECK(gsax::main_effect_mean(m, 1, Vector::Constant(1, x))[0] == doctest::Approx(ref).epsilon(1e-10));

  // Variance of the marginal at one point, by double quadrature of the posterior covariance.
  const double ref_var = oracle::quad2(
      [&](double z1, double z2) {
        Vector p1(2), p2(2);
        p1 << -2.0 + 4.0 * z1, x;
        p2 << -2.0 + 4.0 * z2, x;
        return gsax::posterior_covariance(m, p1, p2);
      },
      0.0, 1.0);
  CHECK(gsax::main_effect_cov(m, 1, Vector::Constant(1, x))(0, 0) ==
        doctest::Approx(ref_var).epsilon(1e-7));
  (void)u;
}
