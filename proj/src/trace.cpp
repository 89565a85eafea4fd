#include "apd/trace.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace apd {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw std::runtime_error("format_double: conversion failed");
  return std::string(buf, end);
}

std::vector<std::string> csv_header(long m) {
  std::vector<std::string> h{"k", "seed", "comm_prob", "beta_scale", "ops"};
  for (long c = 1; c <= m; ++c) h.push_back("t_" + std::to_string(c));
  h.push_back("rel_primal_err");
  for (long c = 1; c <= m; ++c) h.push_back("dual_err_sq_" + std::to_string(c));
  h.push_back("constraint_violation_max");
  h.push_back("discards");
  return h;
}

void write_csv(std::ostream& out, const Trace& trace, const std::vector<ExtraColumn>& extra) {
  for (const auto& col : extra)
    require(col.values.size() == trace.rows.size(), "write_csv: extra column '" + col.name +
                                                        "' has the wrong length");
  auto header = csv_header(trace.m);
  for (const auto& col : extra) header.push_back(col.name);
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';

  for (std::size_t r = 0; r < trace.rows.size(); ++r) {
    const TraceRow& row = trace.rows[r];
    out << row.k << ',' << trace.seed << ',' << format_double(trace.comm_prob) << ','
        << format_double(trace.beta_scale) << ',' << row.ops;
    for (long c = 0; c < trace.m; ++c) out << ',' << row.t[c];
    out << ',' << format_double(row.rel_primal_err);
    for (long c = 0; c < trace.m; ++c)
      out << ',' << format_double(c < row.dual_err_sq.size() ? row.dual_err_sq(c) : 0.0);
    out << ',' << format_double(row.constraint_violation_max) << ',' << row.discards;
    for (const auto& col : extra) out << ',' << format_double(col.values[r]);
    out << '\n';
  }
}

void write_csv_file(const std::string& path, const Trace& trace,
                    const std::vector<ExtraColumn>& extra) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(out, trace, extra);
}

}  // namespace apd
