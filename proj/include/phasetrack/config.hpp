#pragma once

// key=value run configuration.
//
// Lines are `key = value`; `#` starts a comment line. Output files begin with
// a metadata block whose lines read `#: key=value`; feeding such a file back
// as a config reads that block and stops at the first data row, so a run can
// be reproduced from its own output.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "phasetrack/error.hpp"

namespace phasetrack {

inline const std::set<std::string, std::less<>>& known_config_keys() {
  static const std::set<std::string, std::less<>> keys{
      "command",       "scheme",       "squeezing_cap", "n_over_kappa",  "n_list",
      "gamma_over_kappa", "r",         "chi_over_kappa", "delta",        "duration_chi",
      "burn_in_chi",   "stride_chi",   "n_traj",        "seed",          "dt_eta",
      "noise_substeps", "threads",     "bayes_grid",    "estimator",     "holevo",
      "phase_offset",  "out",          "budget",        "gamma_min",     "gamma_max",
      "points_per_decade", "inner_budget", "tolerance", "r_max",      "r_points",
      "build"};
  return keys;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace detail

class RunConfig {
 public:
  /// Parse config text. Unknown keys and malformed lines are errors.
  static RunConfig parse(std::string_view text) {
    RunConfig cfg;
    bool metadata_seen = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto end = std::min(text.find('\n', pos), text.size());
      std::string_view line = detail::trim(text.substr(pos, end - pos));
      pos = end + 1;
      ++line_no;
      if (line.empty()) {
        if (end == text.size()) break;
        continue;
      }
      if (line.rfind("#:", 0) == 0) {
        metadata_seen = true;
        line = detail::trim(line.substr(2));
      } else if (line.front() == '#') {
        continue;
      } else if (metadata_seen) {
        break;  // data rows of a previous output
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
      }
      cfg.set(std::string(detail::trim(line.substr(0, eq))), std::string(detail::trim(line.substr(eq + 1))));
      if (end == text.size()) break;
    }
    return cfg;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
  }

  void set(const std::string& key, const std::string& value) {
    if (!known_config_keys().contains(key)) throw ConfigError("unknown config key: " + key);
    values_[key] = value;
  }

  bool has(std::string_view key) const { return values_.find(key) != values_.end(); }

  const std::string& require(std::string_view key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("missing required config key: " + std::string(key));
    return it->second;
  }

  std::string get_string(std::string_view key, std::string fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double require_double(std::string_view key) const { return to_double(key, require(key)); }
  double get_double(std::string_view key, double fallback) const {
    return has(key) ? require_double(key) : fallback;
  }

  std::uint64_t require_u64(std::string_view key) const { return to_u64(key, require(key)); }
  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) const {
    return has(key) ? require_u64(key) : fallback;
  }

  /// Comma-separated list of numbers.
  std::vector<double> get_list(std::string_view key, std::vector<double> fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    std::string_view rest = require(key);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = detail::trim(rest.substr(0, comma));
      if (!item.empty()) out.push_back(to_double(key, std::string(item)));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (out.empty()) throw ConfigError("config key " + std::string(key) + " needs at least one value");
    return out;
  }

  /// Every entry as `key=value`, sorted by key.
  std::vector<std::string> lines() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : values_) out.push_back(k + "=" + v);
    return out;
  }

 private:
  static double to_double(std::string_view key, const std::string& v) {
    try {
      std::size_t used = 0;
      const double d = std::stod(v, &used);
      if (used != v.size()) throw std::invalid_argument(v);
      return d;
    } catch (const std::exception&) {
      throw ConfigError("config key " + std::string(key) + ": not a number: " + v);
    }
  }

  static std::uint64_t to_u64(std::string_view key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
      throw ConfigError("config key " + std::string(key) + ": not an unsigned integer: " + v);
    }
    return out;
  }

  std::map<std::string, std::string, std::less<>> values_;
};

}  // namespace phasetrack
