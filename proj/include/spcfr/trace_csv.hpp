#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "spcfr/errors.hpp"
#include "spcfr/metrics.hpp"
#include "spcfr/solver.hpp"

namespace spcfr {

inline constexpr const char* kTraceHeader = "t,residual,residual_mbbg,regret_x,regret_y,max_stability_violation,wall_ms";
inline constexpr const char* kSummaryPrefix = "#summary";

namespace detail {

inline std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline std::string format_record(const TraceRecord& r) {
  std::string out = std::to_string(r.t);
  for (double v : {r.residual, r.residual_mbbg, r.regret_x, r.regret_y, r.max_stability_violation, r.wall_ms}) {
    out += ',';
    out += detail::g17(v);
  }
  return out;
}

struct TraceSummary {
  std::size_t t = 0;
  double residual = 0.0;
  double exponent = std::nan("");
  double constant = std::nan("");
  double wall_ms = 0.0;
};

/// Final residual and fitted rate of a finished trace; exponent is NaN when
/// the trace is too short to fit.
inline TraceSummary summarize(const SolveTrace& trace) {
  TraceSummary s;
  if (trace.records.empty()) return s;
  s.t = trace.records.back().t;
  s.residual = trace.records.back().residual;
  s.wall_ms = trace.records.back().wall_ms;
  std::vector<double> t, r;
  for (const auto& rec : trace.records) {
    t.push_back(static_cast<double>(rec.t));
    r.push_back(rec.residual);
  }
  try {
    const auto fit = fit_convergence_rate(t, r);
    s.exponent = fit.exponent;
    s.constant = fit.constant;
  } catch (const std::invalid_argument&) {
  }
  return s;
}

/// Sentinel row closing a complete trace file.
inline std::string format_summary(const TraceSummary& s) {
  return std::string(kSummaryPrefix) + ",t=" + std::to_string(s.t) + ",residual=" + detail::g17(s.residual) +
         ",exponent=" + detail::g17(s.exponent) + ",wall_ms=" + detail::g17(s.wall_ms);
}

/// Streams records to a file, flushing after every row.
class TraceCsvWriter {
 public:
  explicit TraceCsvWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw std::runtime_error("cannot open " + path + " for writing");
    out_ << kTraceHeader << '\n' << std::flush;
  }

  void write(const TraceRecord& r) { out_ << format_record(r) << '\n' << std::flush; }
  void finish(const TraceSummary& s) { out_ << format_summary(s) << '\n' << std::flush; }

 private:
  std::ofstream out_;
};

inline std::string trace_to_csv(const SolveTrace& trace) {
  std::ostringstream out;
  out << kTraceHeader << '\n';
  for (const auto& r : trace.records) out << format_record(r) << '\n';
  out << format_summary(summarize(trace)) << '\n';
  return out.str();
}

struct ParsedTrace {
  std::vector<TraceRecord> records;
  std::optional<std::string> summary;  // the sentinel row, if present

  bool complete() const { return summary.has_value(); }
};

inline ParsedTrace parse_trace_csv(std::istream& in) {
  ParsedTrace out;
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line) || line != kTraceHeader) throw ParseError(1, "trace header mismatch");
  ++line_no;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind(kSummaryPrefix, 0) == 0) {
      out.summary = line;
      continue;
    }
    if (out.summary) throw ParseError(line_no, "row after summary sentinel");
    std::istringstream row(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw ParseError(line_no, "expected 7 columns, got " + std::to_string(cells.size()));
    TraceRecord r;
    try {
      r.t = std::stoull(cells[0]);
      r.residual = std::stod(cells[1]);
      r.residual_mbbg = std::stod(cells[2]);
      r.regret_x = std::stod(cells[3]);
      r.regret_y = std::stod(cells[4]);
      r.max_stability_violation = std::stod(cells[5]);
      r.wall_ms = std::stod(cells[6]);
    } catch (const std::exception&) {
      throw ParseError(line_no, "bad number in trace row");
    }
    out.records.push_back(r);
  }
  return out;
}

inline ParsedTrace read_trace_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_trace_csv(in);
}

}  // namespace spcfr
