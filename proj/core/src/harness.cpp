#include "gsax/harness.hpp"

#include "gsax/trace_io.hpp"

#include <json.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

namespace gsax {

Truth truth_of(const Benchmark& benchmark) {
  return {benchmark.analytic_total_var, benchmark.analytic_main_vars, benchmark.analytic_sobol};
}

std::vector<AggregateRecord> aggregate(const std::vector<ConvergenceTrace>& traces,
                                       const Truth& truth) {
  std::vector<AggregateRecord> out;
  if (traces.empty()) return out;
  const std::string& strategy = traces.front().strategy;
  const auto d = static_cast<Eigen::Index>(truth.sobol.size());

  // Every trace must walk the same sample-count axis for as long as it lasts.
  std::vector<std::size_t> axis;
  for (const auto& t : traces) {
    if (t.strategy != strategy) throw AlignmentError("aggregate: traces mix strategies");
    for (std::size_t k = 0; k < t.records.size(); ++k) {
      const std::size_t n = t.records[k].n_samples;
      if (k < axis.size()) {
        if (axis[k] != n) {
          throw AlignmentError("aggregate: traces disagree on the sample count of record " +
                               std::to_string(k));
        }
      } else {
        if (k > 0 && n <= axis[k - 1]) throw AlignmentError("aggregate: sample counts not increasing");
        axis.push_back(n);
      }
      if (t.records[k].sobol.size() != d || t.records[k].main_effect_vars.size() != d) {
        throw AlignmentError("aggregate: trace dimension does not match truth");
      }
    }
  }

  std::vector<std::string> metrics{"total_var"};
  for (Eigen::Index i = 1; i <= d; ++i) metrics.push_back("mev_" + std::to_string(i));
  for (Eigen::Index i = 1; i <= d; ++i) metrics.push_back("s_" + std::to_string(i));

  for (std::size_t k = 0; k < axis.size(); ++k) {
    std::vector<Vector> errors;  // one vector of squared errors per trial present
    for (const auto& t : traces) {
      if (k >= t.records.size()) continue;
      const TraceRecord& r = t.records[k];
      Vector e(1 + 2 * d);
      e[0] = r.total_var - truth.total_var;
      e.segment(1, d) = r.main_effect_vars - truth.main_effect_vars;
      e.segment(1 + d, d) = r.sobol - truth.sobol;
      errors.push_back(e.array().square());
    }
    const auto count = static_cast<double>(errors.size());
    for (std::size_t m = 0; m < metrics.size(); ++m) {
      const auto mi = static_cast<Eigen::Index>(m);
      double mean = 0.0;
      for (const auto& e : errors) mean += e[mi];
      mean /= count;
      AggregateRecord rec{strategy, axis[k], metrics[m], mean, std::nullopt};
      if (errors.size() >= 2) {
        double ss = 0.0;
        for (const auto& e : errors) ss += (e[mi] - mean) * (e[mi] - mean);
        rec.std = std::sqrt(ss / (count - 1.0));
      }
      out.push_back(std::move(rec));
    }
  }
  return out;
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRecord>& records) {
  out << "strategy,n,metric,mse,std\n";
  for (const auto& r : records) {
    out << r.strategy << ',' << r.n_samples << ',' << r.metric << ',' << format_number(r.mse)
        << ',' << (r.std ? format_number(*r.std) : std::string()) << '\n';
  }
}

std::vector<AggregateRecord> read_aggregate_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "strategy,n,metric,mse,std") {
    throw InvalidParameter("aggregate csv: unexpected header");
  }
  std::vector<AggregateRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    if (line.back() == ',') f.emplace_back();
    if (f.size() != 5) throw InvalidParameter("aggregate csv: expected 5 fields");
    AggregateRecord r;
    r.strategy = f[0];
    r.n_samples = static_cast<std::size_t>(std::stoull(f[1]));
    r.metric = f[2];
    r.mse = parse_number(f[3]);
    if (!f[4].empty()) r.std = parse_number(f[4]);
    out.push_back(std::move(r));
  }
  return out;
}

void write_ratio_surface_csv(std::ostream& out, const Vector& d_a, const Vector& d_y,
                             const Matrix& surface) {
  out << "dA,dY,dS\n";
  for (Eigen::Index r = 0; r < d_a.size(); ++r) {
    for (Eigen::Index c = 0; c < d_y.size(); ++c) {
      out << format_number(d_a[r]) << ',' << format_number(d_y[c]) << ','
          << format_number(surface(r, c)) << '\n';
    }
  }
}

namespace {

nlohmann::json vec_json(const Vector& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

std::string study_metadata(const StudyConfig& c, const Benchmark& bench,
                           const StudyResult& result) {
  using nlohmann::json;
  json j;
  j["format"] = "gsax-study";
  j["version"] = 1;
  j["benchmark"] = c.benchmark;
  j["strategies"] = c.strategies;
  j["n_trials"] = c.n_trials;
  j["n_initial"] = c.loop.n_initial;
  j["budget"] = c.loop.budget;
  j["n_candidates"] = c.loop.n_candidates;
  j["n_grid"] = c.loop.n_grid;
  j["seed"] = c.loop.seed;
  j["estimator"] = std::string(to_string(c.loop.estimator));
  j["n_realizations"] = c.loop.n_realizations;
  j["candidates"] = c.loop.candidates == CandidateSampling::lhs ? "lhs" : "uniform";
  j["weight_mode"] = std::string(to_string(c.loop.strategy.weight_mode));
  j["basis"] = std::string(to_string(c.loop.basis));
  j["converge"] = c.loop.convergence.enabled;
  j["epsilon"] = c.loop.convergence.epsilon;
  j["patience"] = c.loop.convergence.patience;
  j["paired"] = c.paired;
  j["truth"] = {{"total_var", bench.analytic_total_var},
                {"main_effect_vars", vec_json(bench.analytic_main_vars)},
                {"sobol", vec_json(bench.analytic_sobol)}};
  json trials = json::array();
  json failed = json::array();
  for (const auto& t : result.trials) {
    json e{{"strategy", t.strategy},
           {"trial", t.trial},
           {"seed", t.seed},
           {"status", std::string(to_string(t.trace.status))},
           {"records", t.trace.records.size()},
           {"warnings", t.trace.warnings}};
    if (!t.trace.message.empty()) e["message"] = t.trace.message;
    if (t.trace.status == TerminalStatus::error) failed.push_back({{"strategy", t.strategy}, {"trial", t.trial}});
    trials.push_back(std::move(e));
  }
  j["trials"] = std::move(trials);
  j["failed"] = std::move(failed);
  return j.dump(2) + "\n";
}

std::string trace_file_name(const std::string& strategy, std::size_t trial) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04zu", trial);
  return strategy + "_trial" + buf + ".csv";
}

}  // namespace

StudyResult run_study(const StudyConfig& config) {
  config.validate();
  const Benchmark bench = make_benchmark(config.benchmark);
  const Problem problem{bench.name, bench.bounds, bench.evaluate};

  StudyResult result;
  const std::size_t total = config.strategies.size() * config.n_trials;
  result.trials.resize(total);
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    for (std::size_t t = 0; t < config.n_trials; ++t) {
      TrialResult& tr = result.trials[s * config.n_trials + t];
      tr.strategy = config.strategies[s];
      tr.trial = t;
      tr.seed = trial_seed(config.loop.seed, t, s);
    }
  }

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t job = next++; job < total; job = next++) {
      TrialResult& tr = result.trials[job];
      LoopConfig loop = config.loop;
      loop.strategy.kind = parse_strategy(tr.strategy);
      loop.seed = tr.seed;
      if (config.paired) loop.design_seed = trial_seed(config.loop.seed, tr.trial, 0);
      try {
        tr.trace = run(problem, loop);
      } catch (const std::exception& e) {
        tr.trace = ConvergenceTrace{};
        tr.trace.strategy = tr.strategy;
        tr.trace.dim = bench.dim();
        tr.trace.status = TerminalStatus::error;
        tr.trace.message = e.what();
      }
    }
  };
  const std::size_t threads = std::min(config.jobs, total);
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  const Truth truth = truth_of(bench);
  for (std::size_t s = 0; s < config.strategies.size(); ++s) {
    std::vector<ConvergenceTrace> traces;
    for (std::size_t t = 0; t < config.n_trials; ++t) {
      const auto& tr = result.trials[s * config.n_trials + t];
      if (tr.trace.status == TerminalStatus::error) ++result.failed;
      if (!tr.trace.records.empty()) traces.push_back(tr.trace);
    }
    const auto agg = aggregate(traces, truth);
    result.aggregates.insert(result.aggregates.end(), agg.begin(), agg.end());
  }

  namespace fs = std::filesystem;
  const fs::path out_dir(config.output);
  if (config.emit_trace) {
    for (const auto& tr : result.trials) {
      std::ostringstream ss;
      write_trace_csv(ss, bench.dim(), trace_rows(tr.trace, tr.trial, &truth.sobol));
      write_file_atomic((out_dir / "traces" / trace_file_name(tr.strategy, tr.trial)).string(),
                        ss.str());
    }
  }
  if (config.emit_aggregate) {
    std::ostringstream ss;
    write_aggregate_csv(ss, result.aggregates);
    write_file_atomic((out_dir / "aggregate.csv").string(), ss.str());
  }
  if (config.emit_ratio_surface) {
    Vector d_a = uniform_grid(0.0, 1.0, 101);
    Vector d_y = uniform_grid(0.0, 0.5, 101);
    for (double s : {0.01, 0.8}) {
      for (int c = 1; c <= 4; ++c) {
        std::ostringstream ss;
        write_ratio_surface_csv(ss, d_a, d_y, ratio_error_surface(s, 1.0, d_a, d_y, c));
        write_file_atomic((out_dir / ("ratio_surface_s" + format_number(s) + "_case" +
                                      std::to_string(c) + ".csv"))
                              .string(),
                          ss.str());
      }
    }
  }
  write_file_atomic((out_dir / "study.json").string(), study_metadata(config, bench, result));
  return result;
}

}  // namespace gsax
