#pragma once

// Holevo phase variance and its jackknife standard error.

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "phasetrack/angles.hpp"
#include "phasetrack/error.hpp"

namespace phasetrack {

enum class HolevoDefinition { modulus, real_part };

inline std::string_view to_string(HolevoDefinition d) {
  return d == HolevoDefinition::modulus ? "modulus" : "real-part";
}

/// Resultants shorter than this are reported as divergent.
inline constexpr double kMinResultant = 1e-6;

/// Sufficient statistics of a set of wrapped phase errors.
struct ErrorMoments {
  double sum_cos = 0.0;
  double sum_sin = 0.0;
  std::size_t count = 0;

  void add(double error) {
    const double w = wrap_angle(error);
    sum_cos += std::cos(w);
    sum_sin += std::sin(w);
    ++count;
  }
  ErrorMoments& operator+=(const ErrorMoments& o) {
    sum_cos += o.sum_cos;
    sum_sin += o.sum_sin;
    count += o.count;
    return *this;
  }
  ErrorMoments& operator-=(const ErrorMoments& o) {
    sum_cos -= o.sum_cos;
    sum_sin -= o.sum_sin;
    count -= o.count;
    return *this;
  }
};

struct VarianceEstimate {
  double variance = 0.0;
  double std_error = 0.0;
  std::size_t n_trajectories = 0;
  std::size_t n_samples = 0;
  HolevoDefinition definition = HolevoDefinition::real_part;
  bool divergent = false;  ///< resultant below kMinResultant: variance is +inf
};

/// |<e^{i err}>|^{-2} - 1 or Re<e^{i err}>^{-2} - 1 from pooled moments.
/// Returns +inf for a vanishing resultant.
inline double holevo_from_moments(const ErrorMoments& m, HolevoDefinition def) {
  if (m.count == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(m.count);
  const double re = m.sum_cos / n;
  const double im = m.sum_sin / n;
  const double mod = std::hypot(re, im);
  if (mod < kMinResultant) return std::numeric_limits<double>::infinity();
  if (def == HolevoDefinition::modulus) return 1.0 / (mod * mod) - 1.0;
  if (std::abs(re) < kMinResultant) return std::numeric_limits<double>::infinity();
  return 1.0 / (re * re) - 1.0;
}

/// Holevo variance of a flat list of errors. No standard error is attached.
inline VarianceEstimate holevo_variance(std::span<const double> errors,
                                        HolevoDefinition def = HolevoDefinition::real_part) {
  if (errors.empty()) throw ConfigError("holevo_variance: empty error list");
  ErrorMoments m;
  for (double e : errors) m.add(e);
  VarianceEstimate out;
  out.definition = def;
  out.n_samples = m.count;
  out.n_trajectories = 1;
  out.variance = holevo_from_moments(m, def);
  out.divergent = !std::isfinite(out.variance);
  return out;
}

/// Pooled Holevo variance over trajectories with a delete-one jackknife
/// standard error. Trajectories without samples are skipped.
inline VarianceEstimate holevo_jackknife(std::span<const ErrorMoments> per_trajectory,
                                         HolevoDefinition def = HolevoDefinition::real_part) {
  ErrorMoments total;
  std::size_t used = 0;
  for (const auto& m : per_trajectory) {
    if (m.count == 0) continue;
    total += m;
    ++used;
  }
  VarianceEstimate out;
  out.definition = def;
  out.n_trajectories = used;
  out.n_samples = total.count;
  out.variance = holevo_from_moments(total, def);
  out.divergent = !std::isfinite(out.variance);
  if (out.divergent || used < 2) {
    out.std_error = std::numeric_limits<double>::infinity();
    return out;
  }
  std::vector<double> loo;
  loo.reserve(used);
  double mean = 0.0;
  for (const auto& m : per_trajectory) {
    if (m.count == 0) continue;
    ErrorMoments rest = total;
    rest -= m;
    loo.push_back(holevo_from_moments(rest, def));
    mean += loo.back();
  }
  mean /= static_cast<double>(used);
  double ss = 0.0;
  for (double v : loo) ss += (v - mean) * (v - mean);
  out.std_error = std::sqrt(ss * static_cast<double>(used - 1) / static_cast<double>(used));
  return out;
}

/// Ordinary sample variance of the wrapped errors.
inline double wrapped_sample_variance(std::span<const double> errors) {
  if (errors.empty()) return 0.0;
  double sum = 0.0, sum2 = 0.0;
  for (double e : errors) {
    const double w = wrap_angle(e);
    sum += w;
    sum2 += w * w;
  }
  const double n = static_cast<double>(errors.size());
  return sum2 / n - (sum / n) * (sum / n);
}

}  // namespace phasetrack
