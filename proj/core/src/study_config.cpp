#include "gsax/harness.hpp"

#include <charconv>
#include <sstream>

namespace gsax {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T v{};
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw UsageError("setting '" + key + "': expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

double parse_real(const std::string& key, const std::string& value) {
  double v = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), v);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw UsageError("setting '" + key + "': expected a number, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw UsageError("setting '" + key + "': expected true or false, got '" + value + "'");
}

}  // namespace

void StudyConfig::validate() const {
  make_benchmark(benchmark);
  if (strategies.empty()) throw UsageError("study: at least one strategy is required");
  for (const auto& s : strategies) parse_strategy(s);
  if (n_trials < 1) throw UsageError("study: n_trials must be >= 1");
  if (jobs < 1) throw UsageError("study: jobs must be >= 1");
  if (output.empty()) throw UsageError("study: output path is empty");
  try {
    loop.validate();
  } catch (const InvalidParameter& e) {
    throw UsageError(e.what());
  }
}

void apply_setting(StudyConfig& c, const std::string& key, const std::string& value) {
  if (key == "benchmark") {
    c.benchmark = value;
  } else if (key == "strategies" || key == "strategy") {
    c.strategies = split_list(value);
  } else if (key == "n_trials") {
    c.n_trials = parse_integer<std::size_t>(key, value);
  } else if (key == "n_initial") {
    c.loop.n_initial = parse_integer<std::size_t>(key, value);
  } else if (key == "budget") {
    c.loop.budget = parse_integer<std::size_t>(key, value);
  } else if (key == "n_candidates") {
    c.loop.n_candidates = parse_integer<std::size_t>(key, value);
  } else if (key == "n_grid") {
    c.loop.n_grid = parse_integer<std::size_t>(key, value);
  } else if (key == "seed") {
    c.loop.seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "estimator") {
    c.loop.estimator = parse_estimator(value);
  } else if (key == "n_realizations") {
    c.loop.n_realizations = parse_integer<std::size_t>(key, value);
  } else if (key == "candidates") {
    if (value == "uniform") {
      c.loop.candidates = CandidateSampling::uniform;
    } else if (value == "lhs") {
      c.loop.candidates = CandidateSampling::lhs;
    } else {
      throw UsageError("setting 'candidates': expected uniform or lhs");
    }
  } else if (key == "weight_mode") {
    c.loop.strategy.weight_mode = parse_weight_mode(value);
  } else if (key == "basis") {
    c.loop.basis = parse_basis(value);
  } else if (key == "converge") {
    c.loop.convergence.enabled = parse_bool(key, value);
  } else if (key == "epsilon") {
    c.loop.convergence.epsilon = parse_real(key, value);
  } else if (key == "patience") {
    c.loop.convergence.patience = parse_integer<std::size_t>(key, value);
  } else if (key == "refit_restarts") {
    c.loop.refit_restarts = parse_integer<int>(key, value);
  } else if (key == "paired") {
    c.paired = parse_bool(key, value);
  } else if (key == "jobs") {
    c.jobs = parse_integer<std::size_t>(key, value);
  } else if (key == "output") {
    c.output = value;
  } else if (key == "emit") {
    c.emit_trace = c.emit_aggregate = c.emit_ratio_surface = false;
    for (const auto& item : split_list(value)) {
      if (item == "trace") {
        c.emit_trace = true;
      } else if (item == "aggregate") {
        c.emit_aggregate = true;
      } else if (item == "ratio_surface") {
        c.emit_ratio_surface = true;
      } else {
        throw UsageError("setting 'emit': unknown item '" + item + "'");
      }
    }
  } else {
    throw UsageError("unknown setting '" + key + "'");
  }
}

void apply_config_text(StudyConfig& config, std::string_view text) {
  std::stringstream ss{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(ss, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(number) + ": expected key = value");
    }
    apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

std::uint64_t trial_seed(std::uint64_t base, std::size_t trial, std::size_t strategy_index) {
  return derive_seed(base + trial, strategy_index);
}

}  // namespace gsax
