#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gsax/benchmarks.hpp"
#include "gsax/driver.hpp"
#include "gsax/error.hpp"
#include "gsax/trace_io.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <limits>
#include <sstream>

using gsax::Matrix;
using gsax::Vector;

namespace {

gsax::Problem problem_of(const gsax::Benchmark& b) { return {b.name, b.bounds, b.evaluate}; }

gsax::LoopConfig small_config(gsax::StrategyKind kind, std::uint64_t seed) {
  gsax::LoopConfig c;
  c.n_initial = 6;
  c.budget = 12;
  c.n_candidates = 400;
  c.n_grid = 32;
  c.strategy.kind = kind;
  c.convergence.enabled = false;
  c.seed = seed;
  return c;
}

std::vector<gsax::TraceRecord> with_sobol(std::initializer_list<double> first_coord) {
  std::vector<gsax::TraceRecord> out;
  for (double s : first_coord) {
    gsax::TraceRecord r;
    r.sobol = Vector::Constant(2, 0.0);
    r.sobol[0] = s;
    out.push_back(r);
  }
  return out;
}

}  // namespace

TEST_CASE("Latin hypercube strata") {
  const auto bounds = gsax::Bounds::cube(3, 0.0, 1.0);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix x = gsax::lhs_sample(4, bounds, seed);
    for (Eigen::Index k = 0; k < 3; ++k) {
      std::vector<int> count(4, 0);
      for (Eigen::Index i = 0; i < 4; ++i) {
        const int s = static_cast<int>(std::floor(x(i, k) * 4.0));
        REQUIRE(s >= 0);
        REQUIRE(s < 4);
        ++count[static_cast<std::size_t>(s)];
      }
      for (int c : count) CHECK(c == 1);
    }
  }
  const auto wide = gsax::Bounds::cube(2, -3.0, 5.0);
  const Matrix one = gsax::lhs_sample(1, wide, 3);
  CHECK(one.rows() == 1);
  CHECK(wide.contains(one.row(0).transpose()));
  CHECK_THROWS_AS(gsax::lhs_sample(0, wide, 3), gsax::InvalidParameter);
  CHECK(gsax::lhs_sample(7, wide, 11) == gsax::lhs_sample(7, wide, 11));
}

TEST_CASE("Latin hypercube marginals are uniform") {
  const auto bounds = gsax::Bounds::cube(1, 0.0, 1.0);
  const int bins = 20;
  std::vector<double> count(bins, 0.0);
  for (std::uint64_t rep = 0; rep < 1000; ++rep) {
    const Matrix x = gsax::lhs_sample(3, bounds, 1000 + rep);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      count[static_cast<std::size_t>(std::min(bins - 1, static_cast<int>(x(i, 0) * bins)))] += 1.0;
    }
  }
  const double expected = 3000.0 / bins;
  double stat = 0.0;
  for (double c : count) stat += (c - expected) * (c - expected) / expected;
  const boost::math::chi_squared dist(bins - 1);
  CHECK(boost::math::cdf(boost::math::complement(dist, stat)) > 0.01);
}

TEST_CASE("convergence rule") {
  SUBCASE("constant estimates converge once patience is covered") {
    auto recs = with_sobol({0.3, 0.3, 0.3});
    CHECK_FALSE(gsax::check_convergence(recs, 0.01, 3));
    recs = with_sobol({0.3, 0.3, 0.3, 0.3});
    CHECK(gsax::check_convergence(recs, 0.01, 3));
  }
  SUBCASE("oscillation of twice epsilon never converges") {
    std::vector<double> v;
    for (int k = 0; k < 12; ++k) v.push_back(k % 2 == 0 ? 0.3 : 0.32);
    std::vector<gsax::TraceRecord> recs;
    for (double s : v) {
      recs.push_back(with_sobol({s}).front());
      CHECK_FALSE(gsax::check_convergence(recs, 0.01, 3));
    }
  }
  SUBCASE("worked sequence of deltas") {
    // deltas .2, .05, .009, .008, .007
    const double start = 0.5;
    std::vector<double> s{start};
    for (double d : {0.2, 0.05, 0.009, 0.008, 0.007}) s.push_back(s.back() - d);
    std::vector<gsax::TraceRecord> recs;
    std::vector<bool> flags;
    for (double x : s) {
      recs.push_back(with_sobol({x}).front());
      flags.push_back(gsax::check_convergence(recs, 0.01, 3));
    }
    CHECK(flags == std::vector<bool>{false, false, false, false, false, true});
  }
  SUBCASE("every input counts") {
    auto recs = with_sobol({0.3, 0.3, 0.3, 0.3});
    recs[2].sobol[1] = 0.5;
    CHECK_FALSE(gsax::check_convergence(recs, 0.01, 3));
  }
}

TEST_CASE("configuration validation") {
  gsax::LoopConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_initial = 1;
  CHECK_THROWS_AS(c.validate(), gsax::InvalidParameter);
  c = {};
  c.budget = 5;
  CHECK_THROWS_AS(c.validate(), gsax::InvalidParameter);
  c = {};
  c.n_candidates = 1;
  CHECK_THROWS_AS(c.validate(), gsax::InvalidParameter);
  c = {};
  c.convergence.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), gsax::InvalidParameter);
}

TEST_CASE("no adaptive steps when the budget equals the initial design") {
  auto c = small_config(gsax::StrategyKind::vigf, 1);
  c.budget = c.n_initial;
  const auto t = gsax::run(problem_of(gsax::square_exponential(2.0)), c);
  REQUIRE(t.records.size() == 1);
  CHECK(t.status == gsax::TerminalStatus::budget_exhausted);
  CHECK(t.records[0].n_samples == 6);
  CHECK(t.records[0].selected.size() == 0);
}

TEST_CASE("bookkeeping, bounds and determinism for every strategy") {
  const auto b = gsax::ishigami();
  for (auto name : gsax::strategy_names()) {
    CAPTURE(name);
    const auto kind = gsax::parse_strategy(name);
    auto c = small_config(kind, 5);
    std::size_t calls = 0;
    bool outside = false;
    gsax::Problem p{b.name, b.bounds, [&](const Vector& x) {
                      ++calls;
                      if (!b.bounds.contains(x)) outside = true;
                      return b.evaluate(x);
                    }};
    const auto t1 = gsax::run(p, c);
    const auto t2 = gsax::run(p, c);
    REQUIRE(t1.status == gsax::TerminalStatus::budget_exhausted);
    CHECK_FALSE(outside);
    CHECK(calls == 2 * c.budget);
    REQUIRE(t1.records.size() == c.budget - c.n_initial + 1);
    for (std::size_t k = 0; k < t1.records.size(); ++k) {
      const auto& r = t1.records[k];
      CHECK(r.iteration == k);
      CHECK(r.n_samples == c.n_initial + k);
      CHECK(r.sobol.size() == 3);
      CHECK(r.wall_ms == 0.0);
      if (k > 0) {
        CHECK(r.selected == t1.data.inputs.row(static_cast<Eigen::Index>(r.n_samples - 1)).transpose());
      }
    }
    CHECK(t1.data.size() == c.budget);
    CHECK(t1.strategy == name);

    std::vector<gsax::TraceRow> a = gsax::trace_rows(t1, 0), bb = gsax::trace_rows(t2, 0);
    std::ostringstream sa, sb;
    gsax::write_trace_csv(sa, 3, a);
    gsax::write_trace_csv(sb, 3, bb);
    CHECK(sa.str() == sb.str());
  }
}

TEST_CASE("seeds change the run, and the design seed only the initial design") {
  const auto p = problem_of(gsax::square_exponential(2.0));
  auto c = small_config(gsax::StrategyKind::eigf, 1);
  const auto a = gsax::run(p, c);
  c.seed = 2;
  const auto b = gsax::run(p, c);
  CHECK(a.data.inputs != b.data.inputs);
  c.design_seed = 1;
  const auto d = gsax::run(p, c);
  CHECK(d.data.inputs.topRows(6) == a.data.inputs.topRows(6));
}

TEST_CASE("convergence stops the loop early") {
  auto c = small_config(gsax::StrategyKind::random, 3);
  c.budget = 40;
  c.convergence.enabled = true;
  c.convergence.epsilon = 10.0;
  c.convergence.patience = 2;
  const auto t = gsax::run(problem_of(gsax::square_exponential(2.0)), c);
  CHECK(t.status == gsax::TerminalStatus::converged);
  CHECK(t.records.size() == 3);
}

TEST_CASE("full-GP estimator in the loop reports spreads") {
  auto c = small_config(gsax::StrategyKind::music_vigf_d2, 4);
  c.estimator = gsax::Estimator::full_gp;
  c.n_realizations = 20;
  const auto t = gsax::run(problem_of(gsax::square_exponential(2.0)), c);
  REQUIRE(t.status == gsax::TerminalStatus::budget_exhausted);
  for (const auto& r : t.records) {
    REQUIRE(r.sobol_std.has_value());
    CHECK(r.sobol_std->minCoeff() >= 0.0);
  }
}

TEST_CASE("a failing problem ends the run with a partial trace") {
  const auto b = gsax::square_exponential(2.0);
  std::size_t calls = 0;
  gsax::Problem p{b.name, b.bounds, [&](const Vector& x) {
                    return ++calls > 8 ? std::numeric_limits<double>::quiet_NaN() : b.evaluate(x);
                  }};
  const auto t = gsax::run(p, small_config(gsax::StrategyKind::random, 1));
  CHECK(t.status == gsax::TerminalStatus::error);
  CHECK(t.records.size() == 3);
  CHECK_FALSE(t.message.empty());
}

TEST_CASE("trace CSV layout and round trip") {
  CHECK(gsax::trace_header(2) ==
        "trial,iter,n,strategy,total_var,mev_1,mev_2,s_1,s_2,sq_err_s_1,sq_err_s_2,"
        "x_sel_1,x_sel_2,score,wall_ms");
  const auto b = gsax::square_exponential(2.0);
  const auto t = gsax::run(problem_of(b), small_config(gsax::StrategyKind::vigf, 9));
  const Vector truth = b.analytic_sobol;
  const auto rows = gsax::trace_rows(t, 4, &truth);
  std::ostringstream out;
  gsax::write_trace_csv(out, 2, rows);
  const std::string text = out.str();
  CHECK(text.rfind("# gsax-trace v1 dim=2\n" + gsax::trace_header(2) + "\n", 0) == 0);
  std::istringstream in(text);
  const auto back = gsax::read_trace_csv(in);
  REQUIRE(back.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) CHECK(back[k] == rows[k]);
  CHECK(rows[0].selected.size() == 0);
  CHECK(std::isnan(rows[0].score));
  CHECK(rows[1].sq_err_sobol[0] ==
        (rows[1].sobol[0] - truth[0]) * (rows[1].sobol[0] - truth[0]));

  const auto no_truth = gsax::trace_rows(t, 0);
  CHECK(std::isnan(no_truth[0].sq_err_sobol[1]));
  std::ostringstream again;
  gsax::write_trace_csv(again, 2, no_truth);
  std::istringstream in2(again.str());
  const auto back2 = gsax::read_trace_csv(in2);
  CHECK(back2[0] == no_truth[0]);

  std::istringstream bad("# gsax-trace v1 dim=2\ntrial,iter\n");
  CHECK_THROWS_AS(gsax::read_trace_csv(bad), gsax::InvalidParameter);
}

TEST_CASE("number formatting round trips") {
  for (double v : {0.0, -1.5, 0.1, 1.0 / 3.0, 1e-300, 6.02214076e23}) {
    CHECK(gsax::parse_number(gsax::format_number(v)) == v);
  }
  CHECK(gsax::format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(std::isnan(gsax::parse_number("nan")));
  CHECK(gsax::format_number(0.25) == "0.25");
}

TEST_CASE("random sampling on Ishigami approaches the analytic indices") {
  const auto b = gsax::ishigami();
  int close = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    gsax::LoopConfig c;
    c.n_initial = 10;
    c.budget = 200;
    c.convergence.enabled = false;
    c.seed = seed;
    const auto t = gsax::run(problem_of(b), c);
    REQUIRE(t.status == gsax::TerminalStatus::budget_exhausted);
    CHECK(t.records.size() == 191);
    const Vector err = (t.records.back().sobol - b.analytic_sobol).cwiseAbs();
    MESSAGE("seed " << seed << ": max abs error " << err.maxCoeff());
    if (err.maxCoeff() <= 0.1) ++close;
  }
  CHECK(close >= 8);
}
