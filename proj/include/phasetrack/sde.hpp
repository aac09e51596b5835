#pragma once

// Euler-Maruyama integration of the cavity quadratures (Wigner picture), the
// diffusing system phase, and the homodyne / heterodyne photocurrents.
//
// Units: the current is normalised so that its white-noise part has unit
// spectral density, i.e. a sample averaged over dt has variance 1/dt.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <ostream>
#include <vector>

#include "phasetrack/beam.hpp"
#include "phasetrack/error.hpp"
#include "phasetrack/rng.hpp"

namespace phasetrack {

struct TrajectoryState {
  double x = 0.0;      ///< squeezed quadrature
  double y = 0.0;      ///< anti-squeezed quadrature
  double theta = 0.0;  ///< true system phase, never wrapped
  double t = 0.0;
};

struct StepOutput {
  std::complex<double> current;  ///< imaginary part is zero for homodyne
  double dt = 0.0;
  TrajectoryState state;  ///< state at the end of the step
};

/// Unit normal draws consumed by one homodyne step.
struct HomodyneNoise {
  double xi = 0.0;     ///< drives x and the cosine part of the current
  double eta = 0.0;    ///< drives y and the sine part of the current
  double phase = 0.0;  ///< phase diffusion
};

/// Draws consumed by one heterodyne step: unit circular complex Gaussians
/// (<|nu|^2> = 1) and a unit normal for the phase.
struct HeterodyneNoise {
  std::complex<double> nu1;
  std::complex<double> nu2;
  double phase = 0.0;
};

/// Draw noise for one step that spans `substeps` fine steps. The fine draws
/// are taken in the same order a finer integration would consume them and
/// combined as sum / sqrt(substeps), so a run at dt and a run at dt/m with
/// substeps = 1 see the same Brownian path.
inline HomodyneNoise draw_homodyne_noise(NormalStream& rng, int substeps = 1) {
  HomodyneNoise n;
  for (int i = 0; i < substeps; ++i) {
    n.xi += rng.normal();
    n.eta += rng.normal();
    n.phase += rng.normal();
  }
  if (substeps > 1) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(substeps));
    n.xi *= scale;
    n.eta *= scale;
    n.phase *= scale;
  }
  return n;
}

inline HeterodyneNoise draw_heterodyne_noise(NormalStream& rng, int substeps = 1) {
  HeterodyneNoise n;
  constexpr double kHalf = 0.70710678118654752440;
  for (int i = 0; i < substeps; ++i) {
    const double a = rng.normal(), b = rng.normal();
    const double c = rng.normal(), d = rng.normal();
    n.nu1 += std::complex<double>(a, b) * kHalf;
    n.nu2 += std::complex<double>(c, d) * kHalf;
    n.phase += rng.normal();
  }
  if (substeps > 1) {
    const double scale = 1.0 / std::sqrt(static_cast<double>(substeps));
    n.nu1 *= scale;
    n.nu2 *= scale;
    n.phase *= scale;
  }
  return n;
}

/// Default fraction of the fastest time scale used as the step.
inline constexpr double kDefaultDtEta = 0.05;

/// dt = eta * min(2 / (gamma (1 + eps)), 1 / chi, 1 / kappa); rates that are
/// zero impose no limit.
inline double choose_dt(const BeamParams& p, double chi, double eta = kDefaultDtEta) {
  if (!(eta > 0.0)) throw ConfigError("dt eta must be positive");
  double shortest = std::numeric_limits<double>::infinity();
  if (p.gamma > 0.0) shortest = std::min(shortest, 2.0 / (p.gamma * (1.0 + p.eps)));
  if (chi > 0.0) shortest = std::min(shortest, 1.0 / chi);
  if (p.kappa > 0.0) shortest = std::min(shortest, 1.0 / p.kappa);
  if (!std::isfinite(shortest)) shortest = 1.0;
  return eta * shortest;
}

inline void check_step_stability(const BeamParams& p, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (p.gamma * (1.0 + p.eps) * dt / 2.0 >= 1.0) {
    throw NumericalError("sde", "time step too large for the cavity decay: gamma (1+eps) dt / 2 >= 1");
  }
}

/// One homodyne step with the local oscillator held at `phi` over the step.
/// The current uses the true phase at the start of the step.
inline StepOutput step_homodyne(const TrajectoryState& s, const BeamParams& p, double phi,
                                double dt, const HomodyneNoise& n) {
  check_step_stability(p, dt);
  const double sqrt_dt = std::sqrt(dt);
  const double sqrt_g = std::sqrt(p.gamma);
  const double c = std::cos(phi - s.theta);
  const double sn = std::sin(phi - s.theta);
  const double current = c * (sqrt_g * s.x - n.xi / sqrt_dt) +
                         sn * (sqrt_g * s.y + p.amplitude - n.eta / sqrt_dt);
  StepOutput out;
  out.current = {current, 0.0};
  out.dt = dt;
  out.state.x = s.x - s.x * dt * p.gamma * (1.0 + p.eps) / 2.0 + n.xi * sqrt_g * sqrt_dt;
  out.state.y = s.y - s.y * dt * p.gamma * (1.0 - p.eps) / 2.0 + n.eta * sqrt_g * sqrt_dt;
  out.state.theta = s.theta + std::sqrt(p.kappa * dt) * n.phase;
  out.state.t = s.t + dt;
  return out;
}

inline StepOutput step_homodyne(const TrajectoryState& s, const BeamParams& p, double phi,
                                double dt, NormalStream& rng, int substeps = 1) {
  return step_homodyne(s, p, phi, dt, draw_homodyne_noise(rng, substeps));
}

/// One heterodyne step. The complex current is referred to the detuned local
/// oscillator, so no feedback phase enters.
inline StepOutput step_heterodyne(const TrajectoryState& s, const BeamParams& p, double dt,
                                  const HeterodyneNoise& n) {
  check_step_stability(p, dt);
  const double sqrt_dt = std::sqrt(dt);
  const double half_g = std::sqrt(p.gamma / 2.0);
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  const std::complex<double> field(half_g * s.x, half_g * s.y + kInvSqrt2 * p.amplitude);
  const std::complex<double> rot = std::polar(1.0, s.theta);
  StepOutput out;
  out.current = rot * (field - (n.nu1 + n.nu2) / sqrt_dt);
  out.dt = dt;
  const double drive = std::sqrt(2.0 * p.gamma * dt);
  out.state.x = s.x - p.gamma * dt * s.x * (1.0 + p.eps) / 2.0 + drive * n.nu1.real();
  out.state.y = s.y - p.gamma * dt * s.y * (1.0 - p.eps) / 2.0 + drive * n.nu1.imag();
  out.state.theta = s.theta + std::sqrt(p.kappa * dt) * n.phase;
  out.state.t = s.t + dt;
  return out;
}

inline StepOutput step_heterodyne(const TrajectoryState& s, const BeamParams& p, double dt,
                                  NormalStream& rng, int substeps = 1) {
  return step_heterodyne(s, p, dt, draw_heterodyne_noise(rng, substeps));
}

/// Draw (x, y) from the stationary unconditioned distribution.
inline TrajectoryState stationary_state(const BeamParams& p, NormalStream& rng, double theta = 0.0) {
  TrajectoryState s;
  s.x = rng.normal() / std::sqrt(1.0 + p.eps);
  s.y = rng.normal() / std::sqrt(1.0 - p.eps);
  s.theta = theta;
  return s;
}

/// One row of a measurement record: the current over [t, t + dt) together
/// with the local oscillator phase and true phase in force during it.
struct RecordRow {
  double t = 0.0;
  std::complex<double> current;
  double phi = 0.0;
  double theta = 0.0;
};

/// Feedback policies see each current sample and name the local oscillator
/// phase for the next step.
template <class P>
concept FeedbackPolicy = requires(P p, const P cp, std::complex<double> current, double dt) {
  { cp.phase() } -> std::convertible_to<double>;
  p.observe(current, dt);
};

/// Local oscillator held at a fixed phase.
struct FixedPhase {
  double phi = 0.0;
  double phase() const { return phi; }
  void observe(std::complex<double>, double) {}
};

inline std::size_t record_length(double duration, double dt) {
  if (!(duration > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil(duration / dt - 1e-9));
}

/// Integrate for `duration` and return the synchronised record. The policy
/// is consulted every step for adaptive detection and ignored for heterodyne.
template <FeedbackPolicy Policy>
std::vector<RecordRow> simulate_record(const BeamParams& p, Detection detection, Policy& policy,
                                       TrajectoryState state, double duration, double dt,
                                       NormalStream& rng, int substeps = 1) {
  const std::size_t steps = record_length(duration, dt);
  std::vector<RecordRow> record;
  record.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    RecordRow row;
    row.t = state.t;
    row.theta = state.theta;
    StepOutput out;
    if (detection == Detection::adaptive) {
      row.phi = policy.phase();
      out = step_homodyne(state, p, row.phi, dt, rng, substeps);
      policy.observe(out.current, dt);
    } else {
      row.phi = std::numeric_limits<double>::quiet_NaN();
      out = step_heterodyne(state, p, dt, rng, substeps);
    }
    row.current = out.current;
    record.push_back(row);
    state = out.state;
  }
  return record;
}

/// CSV dump with header `t,I_re,I_im,Phi,Theta`. I_im and Phi are left empty
/// where they do not apply.
inline void write_record_csv(std::ostream& os, const std::vector<RecordRow>& record,
                             Detection detection) {
  os << "t,I_re,I_im,Phi,Theta\n";
  os.precision(17);
  for (const auto& row : record) {
    os << row.t << ',' << row.current.real() << ',';
    if (detection == Detection::heterodyne) os << row.current.imag();
    os << ',';
    if (detection == Detection::adaptive) os << row.phi;
    os << ',' << row.theta << '\n';
  }
}

}  // namespace phasetrack
