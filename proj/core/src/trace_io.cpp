#include "gsax/trace_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace gsax {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_number(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InvalidParameter("not a number: '" + std::string(text) + "'");
  }
  return v;
}

namespace {

bool same(double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); }

bool same(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (!same(a[i], b[i])) return false;
  }
  return true;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::size_t parse_count(std::string_view text) {
  std::size_t v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw InvalidParameter("not a count: '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

bool TraceRow::operator==(const TraceRow& o) const {
  return trial == o.trial && iteration == o.iteration && n_samples == o.n_samples &&
         strategy == o.strategy && same(total_var, o.total_var) &&
         same(main_effect_vars, o.main_effect_vars) && same(sobol, o.sobol) &&
         same(sq_err_sobol, o.sq_err_sobol) && same(selected, o.selected) &&
         same(score, o.score) && same(wall_ms, o.wall_ms);
}

std::string trace_header(std::size_t dim) {
  std::string h = "trial,iter,n,strategy,total_var";
  for (const char* prefix : {"mev_", "s_", "sq_err_s_", "x_sel_"}) {
    for (std::size_t i = 1; i <= dim; ++i) h += "," + std::string(prefix) + std::to_string(i);
  }
  h += ",score,wall_ms";
  return h;
}

std::vector<TraceRow> trace_rows(const ConvergenceTrace& trace, std::size_t trial,
                                 const Vector* truth) {
  std::vector<TraceRow> rows;
  rows.reserve(trace.records.size());
  const auto d = static_cast<Eigen::Index>(trace.dim);
  for (const auto& rec : trace.records) {
    TraceRow row;
    row.trial = trial;
    row.iteration = rec.iteration;
    row.n_samples = rec.n_samples;
    row.strategy = trace.strategy;
    row.total_var = rec.total_var;
    row.main_effect_vars = rec.main_effect_vars;
    row.sobol = rec.sobol;
    row.sq_err_sobol = truth ? Vector((rec.sobol - *truth).array().square())
                             : Vector::Constant(d, std::numeric_limits<double>::quiet_NaN());
    row.selected = rec.selected;
    row.score = rec.score;
    row.wall_ms = rec.wall_ms;
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_trace_csv(std::ostream& out, std::size_t dim, const std::vector<TraceRow>& rows) {
  out << "# " << kTraceSchema << " dim=" << dim << '\n' << trace_header(dim) << '\n';
  const auto put = [&](const Vector& v) {
    for (std::size_t i = 0; i < dim; ++i) {
      out << ',';
      if (v.size() != 0) out << format_number(v[static_cast<Eigen::Index>(i)]);
    }
  };
  for (const auto& r : rows) {
    out << r.trial << ',' << r.iteration << ',' << r.n_samples << ',' << r.strategy << ','
        << format_number(r.total_var);
    put(r.main_effect_vars);
    put(r.sobol);
    put(r.sq_err_sobol);
    put(r.selected);
    out << ',' << format_number(r.score) << ',' << format_number(r.wall_ms) << '\n';
  }
}

std::vector<TraceRow> read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# " + std::string(kTraceSchema), 0) != 0) {
    throw InvalidParameter("trace csv: missing '" + std::string(kTraceSchema) + "' header");
  }
  const auto dim_at = line.find("dim=");
  if (dim_at == std::string::npos) throw InvalidParameter("trace csv: header lacks dim=");
  const std::size_t dim = parse_count(std::string_view(line).substr(dim_at + 4));
  if (!std::getline(in, line) || line != trace_header(dim)) {
    throw InvalidParameter("trace csv: column header does not match schema");
  }
  const auto d = static_cast<Eigen::Index>(dim);
  std::vector<TraceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 7 + 4 * dim) throw InvalidParameter("trace csv: wrong number of fields");
    TraceRow r;
    r.trial = parse_count(f[0]);
    r.iteration = parse_count(f[1]);
    r.n_samples = parse_count(f[2]);
    r.strategy = std::string(f[3]);
    r.total_var = parse_number(f[4]);
    std::size_t pos = 5;
    const auto take = [&](Vector& v, bool optional) {
      if (optional && f[pos].empty()) {
        v.resize(0);
        pos += dim;
        return;
      }
      v.resize(d);
      for (Eigen::Index i = 0; i < d; ++i) v[i] = parse_number(f[pos++]);
    };
    take(r.main_effect_vars, false);
    take(r.sobol, false);
    take(r.sq_err_sobol, false);
    take(r.selected, true);
    r.score = parse_number(f[pos++]);
    r.wall_ms = parse_number(f[pos]);
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out << contents;
    if (!out.flush()) throw Error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, target);
}

}  // namespace gsax
