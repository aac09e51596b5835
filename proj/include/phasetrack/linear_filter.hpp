#pragma once

// Linear phase filter. Two exponentially damped accumulators
//   A_t = int e^{chi (u - t)} e^{i Phi(u)} I(u) du
//   B_t = -int e^{chi (u - t)} e^{2 i Phi(u)} du
// give the estimate arg C_t with C = A + chi B A*. The local oscillator is
// steered to the shorter-arc blend of arg C and arg A with weight delta.

#include <cmath>
#include <complex>
#include <optional>

#include "phasetrack/angles.hpp"
#include "phasetrack/error.hpp"

namespace phasetrack {

/// Calibrated offset between arg C and the phase estimate. Fixed once by
/// the coherent-beam benchmark (the mean field enters the sin(Phi - Theta)
/// quadrature, so the lock point sits a quarter turn from arg C).
inline constexpr double kDefaultPhaseOffset = -kPi / 2.0;

struct LinearFilterState {
  std::complex<double> A{0.0, 0.0};
  std::complex<double> B{0.0, 0.0};
  double chi = 1.0;
  double delta = 0.5;
  double phi = 0.0;  ///< local oscillator phase for the next sample
  double phi0 = kDefaultPhaseOffset;

  std::complex<double> C() const { return A + chi * B * std::conj(A); }
};

inline LinearFilterState make_linear_filter(double chi, double delta, double initial_phi = 0.0,
                                            double phi0 = kDefaultPhaseOffset) {
  if (!(chi > 0.0)) throw ConfigError("filter bandwidth chi must be positive");
  if (!(delta >= 0.0 && delta <= 1.0)) throw ConfigError("delta must lie in [0, 1]");
  LinearFilterState s;
  s.chi = chi;
  s.delta = delta;
  s.phi = initial_phi;
  s.phi0 = phi0;
  return s;
}

/// Local oscillator phase arg(C^{1-delta} A^delta) + phi0 for the current
/// accumulators, or nothing while A vanishes.
inline std::optional<double> feedback_phase(const LinearFilterState& s) {
  if (s.A == std::complex<double>(0.0, 0.0)) return std::nullopt;
  const std::complex<double> c = s.C();
  const double arg_c = c == std::complex<double>(0.0, 0.0) ? std::arg(s.A) : std::arg(c);
  return wrap_angle(shorter_arc_mix(arg_c, std::arg(s.A), s.delta) + s.phi0);
}

/// Feed one homodyne sample taken with the local oscillator at s.phi, then
/// choose the next phase. A vanishing A leaves the phase where it was.
inline void linear_update(LinearFilterState& s, double current, double dt) {
  if (!(dt * s.chi < 1.0)) {
    throw NumericalError("filters", "chi dt must be below 1 for the linear filter");
  }
  const std::complex<double> lo = std::polar(1.0, s.phi);
  s.A += dt * (-s.chi * s.A + lo * current);
  s.B += dt * (-s.chi * s.B - lo * lo);
  if (const auto next = feedback_phase(s)) s.phi = *next;
}

/// arg C + phi0, or nothing while C vanishes.
inline std::optional<double> linear_estimate(const LinearFilterState& s) {
  const std::complex<double> c = s.C();
  if (c == std::complex<double>(0.0, 0.0)) return std::nullopt;
  return wrap_angle(std::arg(c) + s.phi0);
}

/// Adapts the linear filter to the feedback-policy interface of the
/// integrator.
struct LinearFeedback {
  LinearFilterState state;

  double phase() const { return state.phi; }
  void observe(std::complex<double> current, double dt) { linear_update(state, current.real(), dt); }
};

/// Heterodyne variant: a single damped accumulator of the complex current.
struct HeterodyneLinearState {
  std::complex<double> A{0.0, 0.0};
  double chi = 1.0;
};

inline void linear_update(HeterodyneLinearState& s, std::complex<double> current, double dt) {
  if (!(dt * s.chi < 1.0)) {
    throw NumericalError("filters", "chi dt must be below 1 for the linear filter");
  }
  s.A += dt * (-s.chi * s.A + current);
}

/// arg A - pi/2: the mean current is i e^{i Theta} times a positive constant.
inline std::optional<double> linear_estimate(const HeterodyneLinearState& s) {
  if (s.A == std::complex<double>(0.0, 0.0)) return std::nullopt;
  return wrap_angle(std::arg(s.A) - kPi / 2.0);
}

}  // namespace phasetrack
