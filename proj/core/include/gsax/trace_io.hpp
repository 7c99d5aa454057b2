#pragma once

#include "gsax/driver.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace gsax {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
double parse_number(std::string_view text);

inline constexpr std::string_view kTraceSchema = "gsax-trace v1";

/// One CSV row of a trace file.
struct TraceRow {
  std::size_t trial = 0;
  std::size_t iteration = 0;
  std::size_t n_samples = 0;
  std::string strategy;
  double total_var = 0.0;
  Vector main_effect_vars;
  Vector sobol;
  Vector sq_err_sobol;  // NaN where no truth was supplied
  Vector selected;      // empty for the initial record
  double score = 0.0;
  double wall_ms = 0.0;

  bool operator==(const TraceRow& other) const;
};

std::string trace_header(std::size_t dim);

/// Rows of `trace`, with squared errors against `truth` when given.
std::vector<TraceRow> trace_rows(const ConvergenceTrace& trace, std::size_t trial,
                                 const Vector* truth = nullptr);

void write_trace_csv(std::ostream& out, std::size_t dim, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(std::istream& in);

/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace gsax
