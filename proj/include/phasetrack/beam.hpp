#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>

#include "phasetrack/error.hpp"

namespace phasetrack {

/// Cavity squeezing parameter: e^r = (1 + eps) / (1 - eps).
inline double epsilon_from_r(double r) {
  if (!(r >= 0.0) || !std::isfinite(r)) {
    throw ConfigError("squeezing parameter r must be finite and >= 0");
  }
  return std::tanh(0.5 * r);
}

inline double r_from_epsilon(double eps) {
  if (!(eps >= 0.0 && eps < 1.0)) {
    throw ConfigError("epsilon must lie in [0, 1)");
  }
  return 2.0 * std::atanh(eps);
}

/// Photon flux of a squeezed coherent beam with amplitude E, cavity decay
/// gamma and squeezing r.
inline double photon_flux(double amplitude, double gamma, double r) {
  if (!std::isfinite(amplitude) || !(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ConfigError("photon_flux: amplitude and gamma must be finite, gamma >= 0");
  }
  const double sh = std::sinh(r);
  return 0.25 * amplitude * amplitude + 0.5 * gamma * sh * sh;
}

/// Coherent amplitude E >= 0 that yields total flux N. Throws when the
/// squeezing alone exceeds the flux budget.
inline double amplitude_from_flux(double flux, double gamma, double r) {
  const double sh = std::sinh(r);
  const double e2 = 4.0 * (flux - 0.5 * gamma * sh * sh);
  if (!(e2 >= 0.0)) {
    throw ConfigError("squeezing flux (gamma/2) sinh^2 r exceeds the photon flux");
  }
  return std::sqrt(e2);
}

/// Physical model of the beam. Times are in units where kappa is usually 1.
struct BeamParams {
  double flux = 0.0;     ///< N, photons per unit time
  double kappa = 1.0;    ///< phase diffusion rate (linewidth)
  double gamma = 0.0;    ///< squeezing cavity decay rate
  double r = 0.0;        ///< squeezing parameter
  double eps = 0.0;      ///< cavity parameterisation of r
  double amplitude = 0.0;  ///< E, with E^2 = 4 (N - (gamma/2) sinh^2 r)

  /// E' = E / sqrt(gamma); infinite for a coherent beam without a cavity.
  double scaled_amplitude() const {
    return gamma > 0.0 ? amplitude / std::sqrt(gamma)
                       : std::numeric_limits<double>::infinity();
  }

  static BeamParams from_flux(double flux, double gamma, double r,
                              double kappa = 1.0) {
    validate_common(gamma, r, kappa);
    if (!(flux > 0.0) || !std::isfinite(flux)) {
      throw ConfigError("photon flux must be positive");
    }
    BeamParams p;
    p.flux = flux;
    p.kappa = kappa;
    p.gamma = gamma;
    p.r = r;
    p.eps = epsilon_from_r(r);
    p.amplitude = amplitude_from_flux(flux, gamma, r);
    return p;
  }

  static BeamParams from_amplitude(double amplitude, double gamma, double r,
                                   double kappa = 1.0) {
    validate_common(gamma, r, kappa);
    if (!(amplitude >= 0.0) || !std::isfinite(amplitude)) {
      throw ConfigError("coherent amplitude must be finite and >= 0");
    }
    BeamParams p;
    p.kappa = kappa;
    p.gamma = gamma;
    p.r = r;
    p.eps = epsilon_from_r(r);
    p.amplitude = amplitude;
    p.flux = photon_flux(amplitude, gamma, r);
    return p;
  }

 private:
  static void validate_common(double gamma, double r, double kappa) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
      throw ConfigError("gamma must be finite and >= 0");
    }
    if (!(r >= 0.0) || !std::isfinite(r)) {
      throw ConfigError("squeezing parameter r must be finite and >= 0");
    }
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
      throw ConfigError("kappa must be finite and >= 0");
    }
  }
};

enum class Detection { adaptive, heterodyne };
enum class SqueezingMode { arbitrary, limited, coherent };

inline std::string_view to_string(Detection d) {
  return d == Detection::adaptive ? "adaptive" : "heterodyne";
}

inline std::string_view to_string(SqueezingMode m) {
  switch (m) {
    case SqueezingMode::arbitrary: return "arbitrary";
    case SqueezingMode::limited: return "limited";
    case SqueezingMode::coherent: return "coherent";
  }
  return "?";
}

inline Detection parse_detection(std::string_view s) {
  if (s == "adaptive") return Detection::adaptive;
  if (s == "heterodyne") return Detection::heterodyne;
  throw ConfigError("unknown detection '" + std::string(s) +
                    "' (expected adaptive|heterodyne)");
}

inline SqueezingMode parse_squeezing_mode(std::string_view s) {
  if (s == "arbitrary") return SqueezingMode::arbitrary;
  if (s == "limited") return SqueezingMode::limited;
  if (s == "coherent") return SqueezingMode::coherent;
  throw ConfigError("unknown squeezing mode '" + std::string(s) +
                    "' (expected arbitrary|limited|coherent)");
}

/// One of the six measurement schemes: detection type crossed with the
/// squeezing regime. `squeezing_cap` bounds e^{2r} in limited mode.
struct SchemeConfig {
  Detection detection = Detection::adaptive;
  SqueezingMode squeezing = SqueezingMode::coherent;
  double squeezing_cap = 2.0;

  double max_r() const {
    switch (squeezing) {
      case SqueezingMode::coherent: return 0.0;
      case SqueezingMode::limited: return 0.5 * std::log(squeezing_cap);
      case SqueezingMode::arbitrary: return std::numeric_limits<double>::infinity();
    }
    return 0.0;
  }

  bool admits(double r) const { return r >= 0.0 && r <= max_r() * (1.0 + 1e-12); }

  std::string name() const {
    return std::string(to_string(detection)) + "-" + std::string(to_string(squeezing));
  }

  static SchemeConfig parse(std::string_view name) {
    const auto dash = name.find('-');
    if (dash == std::string_view::npos) {
      throw ConfigError("scheme must look like <detection>-<squeezing>, got '" +
                        std::string(name) + "'");
    }
    SchemeConfig s;
    s.detection = parse_detection(name.substr(0, dash));
    s.squeezing = parse_squeezing_mode(name.substr(dash + 1));
    return s;
  }
};

inline std::array<SchemeConfig, 6> all_schemes(double cap = 2.0) {
  return {SchemeConfig{Detection::adaptive, SqueezingMode::arbitrary, cap},
          SchemeConfig{Detection::adaptive, SqueezingMode::limited, cap},
          SchemeConfig{Detection::adaptive, SqueezingMode::coherent, cap},
          SchemeConfig{Detection::heterodyne, SqueezingMode::arbitrary, cap},
          SchemeConfig{Detection::heterodyne, SqueezingMode::limited, cap},
          SchemeConfig{Detection::heterodyne, SqueezingMode::coherent, cap}};
}

}  // namespace phasetrack
