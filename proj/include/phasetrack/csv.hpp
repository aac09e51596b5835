#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "phasetrack/config.hpp"

namespace phasetrack {

/// Columns shared by every variance result row.
inline constexpr std::string_view kVarianceColumns =
    "scheme,detection,n_over_kappa,gamma_over_kappa,r,chi_over_kappa,delta,estimator,variance,std_error,"
    "n_traj,dt_eta,seed";

/// Fixed-format number: 10 significant digits, `inf`/`nan` spelled out.
inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline std::string fmt_num(std::uint64_t v) { return std::to_string(v); }

/// Writes the `#:` metadata block that starts every output file.
inline void write_metadata(std::ostream& os, std::string_view build_id, const RunConfig& cfg) {
  os << "# phasetrack output; the #: lines are the resolved configuration\n";
  os << "#: build=" << build_id << '\n';
  for (const auto& line : cfg.lines()) {
    if (line.rfind("build=", 0) == 0) continue;
    os << "#: " << line << '\n';
  }
}

/// One CSV row from already formatted fields.
inline void write_row(std::ostream& os, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) os << ',';
    os << fields[i];
  }
  os << '\n';
}

}  // namespace phasetrack
