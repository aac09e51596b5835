#pragma once

// Closed-form predictions for continuous phase estimation on narrowband
// squeezed beams. Everything here is a pure function of its arguments.
//
// Conventions: x is the squeezed cavity quadrature, angles are in radians,
// `phi_minus_theta` is the angle between the local oscillator phase and the
// (hypothesised or true) system phase.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <utility>

#include "phasetrack/beam.hpp"
#include "phasetrack/jet.hpp"

namespace phasetrack {

/// Steady state of the conditional covariance for fixed local oscillator and
/// system phases, in the frame rotated so that the measured quadrature is the
/// first coordinate. (a, b, d) are the elements of that rotated covariance.
///
/// Omega and Lambda describe the response of the conditional mean:
/// sqrt(gamma) A^T xbar(t) = gamma Re(Omega int e^{gamma Lambda (u - t)} dI(u)).
/// delta carries the sign of Y so that every field is analytic in the angle;
/// flipping it conjugates Omega and Lambda together and leaves all real
/// observables unchanged.
struct SteadyStateG {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
  double X = 0.0;
  double Y = 0.0;
  double delta = 0.0;
  std::complex<double> omega;
  std::complex<double> lambda;
};

namespace detail {

template <class T>
struct SteadyStateT {
  T a, b, d, X, Y, delta;
  CComplex<T> omega, lambda;
};

// The textbook forms b = a(a - 2X)/(2Y) and Im(Omega) = (a - 2X)/Delta are
// 0/0 at Y = 0. Using a - 2X = (4Y^2 + Delta^2)/(a + 2X) and
// Delta = Y k with k = sqrt(2 / (W + Q)) removes the cancellation, so the
// expressions below are smooth through Y = 0 and equal their limits there.
template <class T>
SteadyStateT<T> steady_state(double eps, const T& angle) {
  using std::sqrt;
  using std::sin;
  using std::cos;
  const T s = sin(angle);
  const T c = cos(angle);
  const T X = T(0.5 * (1.0 - eps)) + T(eps) * s * s;
  const T Y = T(eps) * s * c;
  const T Q = X * X + Y * Y;
  const T W = sqrt(Q * Q + Y * Y);
  const T a = sqrt(T(2.0) * (Q + W));
  const T k = sqrt(T(2.0) / (W + Q));
  const T four_plus_k2 = T(4.0) + k * k;
  const T b = a * Y * four_plus_k2 / (T(2.0) * (a + T(2.0) * X));
  const T d = (T(1.0) - b * b + T(2.0) * Y * b) / (T(2.0) * X);
  const T delta = Y * k;
  const T omega_im = Y * four_plus_k2 / ((a + T(2.0) * X) * k);
  SteadyStateT<T> out{a, b, d, X, Y, delta, {a - T(1.0), omega_im},
                      {T(0.5) * a, T(0.5) * delta}};
  return out;
}

// f as a function of the filter's angle Phi - theta, with S = sin(Phi - Theta)
// held fixed.
template <class T>
T noise_info_f(double eps, double true_sin, const T& filter_angle) {
  const auto ss = steady_state<T>(eps, filter_angle);
  const CComplex<T>& om = ss.omega;
  const CComplex<T>& lam = ss.lambda;
  const T om_abs2 = norm(om);
  const CComplex<T> om2 = om * om;
  const CComplex<T> two_lam{T(2.0) * lam.re, T(2.0) * lam.im};
  const CComplex<T> four_lam{T(4.0) * lam.re, T(4.0) * lam.im};
  // Omega^2/(2 Lambda) + |Omega|^2/a - 2 Omega
  const CComplex<T> core = om2 / two_lam + CComplex<T>{om_abs2 / ss.a, T(0.0)} -
                           CComplex<T>{T(2.0) * om.re, T(2.0) * om.im};
  const double s2 = true_sin * true_sin;
  const double wy = s2 * eps / (1.0 - eps);
  const double wx = (s2 - 1.0) * eps / (1.0 + eps);
  const CComplex<T> ry = core / (lam + CComplex<T>{T(0.5 * (1.0 - eps)), T(0.0)});
  const CComplex<T> rx = core / (lam + CComplex<T>{T(0.5 * (1.0 + eps)), T(0.0)});
  const CComplex<T> head = om2 / four_lam;
  return om_abs2 / (T(2.0) * ss.a) + head.re + T(wy) * (T(1.0) + ry.re) +
         T(wx) * (T(1.0) + rx.re);
}

}  // namespace detail

inline SteadyStateG steady_state_g_matrix(double r, double phi_minus_theta) {
  const auto t = detail::steady_state<double>(epsilon_from_r(r), phi_minus_theta);
  return {t.a, t.b, t.d, t.X, t.Y, t.delta, {t.omega.re, t.omega.im},
          {t.lambda.re, t.lambda.im}};
}

/// Effective noise factor of the measured quadrature at low frequency.
inline double xi_factor(double r, double sin_phi_minus_theta) {
  const double s2 = sin_phi_minus_theta * sin_phi_minus_theta;
  return (1.0 - s2) * std::exp(-2.0 * r) + s2 * std::exp(2.0 * r);
}

/// |[1 - Re(Omega/Lambda)]^2 - (c^2 e^{-2r} + s^2 e^{2r})^{-1}|.
inline double info_identity_check(double r, double phi_minus_theta) {
  const auto g = steady_state_g_matrix(r, phi_minus_theta);
  const double lhs = std::pow(1.0 - (g.omega / g.lambda).real(), 2);
  const double rhs = 1.0 / xi_factor(r, std::sin(phi_minus_theta));
  return std::abs(lhs - rhs);
}

/// Noise contribution to the expected squared innovation, per unit gamma, for
/// a filter tuned to theta while the system sits at Theta.
inline double noise_info_f(double r, double phi_minus_Theta, double theta_minus_Theta) {
  return detail::noise_info_f<double>(epsilon_from_r(r), std::sin(phi_minus_Theta),
                                      phi_minus_Theta - theta_minus_Theta);
}

/// Phase information per unit gamma carried by the squeezed noise: the
/// curvature coefficient of f in (theta - Theta) at theta = Theta. Evaluated
/// exactly by second-order forward differentiation of f.
inline double noise_info_g(double r, double phi_minus_Theta) {
  const double eps = epsilon_from_r(r);
  if (eps == 0.0) return 0.0;
  // filter angle = (Phi - Theta) - (theta - Theta), so it moves with slope -1.
  const Jet2 angle{phi_minus_Theta, -1.0, 0.0};
  // A true zero at the aligned angles can come out as -1e-10 after
  // cancellation at large r.
  return std::max(0.0, detail::noise_info_f<Jet2>(eps, std::sin(phi_minus_Theta), angle).d2);
}

/// Noise information term for heterodyne detection.
inline double noise_info_h(double r) {
  const double eps = epsilon_from_r(r);
  return std::cosh(r) - 1.0 / std::sqrt(eps * eps + 1.0);
}

/// Steady-state conditional variances (sigma_x^2, sigma_y^2) of the
/// heterodyne filter.
inline std::pair<double, double> heterodyne_steady_variances(double eps) {
  const double root = std::sqrt(eps * eps + 1.0);
  return {root - eps, root + eps};
}

/// Rate of inverse-variance growth for adaptive homodyne detection at a fixed
/// feedback error.
inline double adaptive_info_rate(const BeamParams& p, double phi_minus_Theta) {
  const double c = std::cos(phi_minus_Theta);
  const double xi = xi_factor(p.r, std::sin(phi_minus_Theta));
  return p.amplitude * p.amplitude * c * c / xi + p.gamma * noise_info_g(p.r, phi_minus_Theta);
}

inline double heterodyne_info_rate(const BeamParams& p) {
  return p.amplitude * p.amplitude / (1.0 + std::exp(-2.0 * p.r)) +
         2.0 * p.gamma * noise_info_h(p.r);
}

/// Predicted steady-state variance scaled by sqrt(N/kappa), at the squeezing
/// of `p`, in the regime N >> kappa with the flux dominated by the coherent
/// part.
inline double predicted_variance(const SchemeConfig& scheme, const BeamParams& p) {
  if (scheme.detection == Detection::adaptive) return 0.5 * std::exp(-p.r);
  return 0.5 * std::sqrt(1.0 + std::exp(-2.0 * p.r));
}

/// Asymptotic (N/kappa -> infinity) value of sigma^2 sqrt(N/kappa) for a
/// scheme: arbitrary squeezing drives the adaptive constant to zero and the
/// heterodyne constant to 1/2; limited squeezing sits at the cap.
inline double asymptotic_constant(const SchemeConfig& scheme) {
  double r = 0.0;
  switch (scheme.squeezing) {
    case SqueezingMode::coherent: r = 0.0; break;
    case SqueezingMode::limited: r = scheme.max_r(); break;
    case SqueezingMode::arbitrary:
      return scheme.detection == Detection::adaptive ? 0.0 : 0.5;
  }
  BeamParams p;
  p.r = r;
  return predicted_variance(scheme, p);
}

struct GammaBounds {
  double lower = 0.0;  ///< kappa e^{2r} sqrt(N/kappa)
  double upper = 0.0;  ///< 2N / sinh^2 r; infinite at r = 0
  bool nonempty = false;
  /// The same bounds with unit prefactors: e^{2r} sqrt(N/kappa) and
  /// e^{-2r} N/kappa (in units of kappa). They cross at N/kappa = e^{8r}.
  double scaling_lower = 0.0;
  double scaling_upper = 0.0;
  bool scaling_nonempty = false;
};

inline GammaBounds gamma_bounds(double flux, double kappa, double r) {
  if (!(r >= 0.0)) throw ConfigError("gamma_bounds: r must be >= 0");
  if (!(flux > 0.0) || !(kappa > 0.0)) {
    throw ConfigError("gamma_bounds: flux and kappa must be positive");
  }
  const double n = flux / kappa;
  const double sh = std::sinh(r);
  GammaBounds b;
  b.lower = kappa * std::exp(2.0 * r) * std::sqrt(n);
  b.upper = sh > 0.0 ? 2.0 * flux / (sh * sh) : std::numeric_limits<double>::infinity();
  b.nonempty = b.lower < b.upper;
  b.scaling_lower = kappa * std::exp(2.0 * r) * std::sqrt(n);
  b.scaling_upper = kappa * std::exp(-2.0 * r) * n;
  b.scaling_nonempty = b.scaling_lower < b.scaling_upper;
  return b;
}

/// Power-law predictions for the optimal parameters, unit prefactors.
struct ScalingPrediction {
  double variance = 1.0;       ///< sigma^2 ~ (kappa/N)^{5/8}
  double exp_r = 1.0;          ///< e^r ~ (N/kappa)^{1/8}
  double gamma_over_kappa = 1.0;  ///< ~ (N/kappa)^{3/4}
  double chi_over_kappa = 1.0;    ///< ~ (N/kappa)^{5/8}
  double delta = 1.0;             ///< ~ (N/kappa)^{1/4}
};

inline ScalingPrediction scaling_predictions(double n_over_kappa) {
  if (!(n_over_kappa > 0.0)) throw ConfigError("scaling_predictions: N/kappa must be > 0");
  const double n = n_over_kappa;
  return {std::pow(n, -5.0 / 8.0), std::pow(n, 1.0 / 8.0), std::pow(n, 0.75),
          std::pow(n, 5.0 / 8.0), std::pow(n, 0.25)};
}

/// Time over which squeezing becomes visible in the photocurrent.
inline double squeezing_timescale(double r, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("squeezing_timescale: gamma must be > 0");
  return (std::exp(r) + 1.0) / gamma;
}

struct CurrentCovariance {
  double value = 0.0;      ///< non-singular part of <dI(u) dI(v)>
  bool has_shot_delta = false;  ///< a unit delta(u - v) sits on top at lag 0
};

/// Covariance of the innovation-free current residual dI = I - s E for a
/// system at sin(Phi - Theta) = S and a filter assuming sin(Phi - theta) = s.
inline CurrentCovariance analytic_current_covariance(const BeamParams& p, double S, double s,
                                                     double tau) {
  if (!(std::abs(S) <= 1.0) || !(std::abs(s) <= 1.0) || !(tau >= 0.0)) {
    throw ConfigError("analytic_current_covariance: need |S|,|s| <= 1 and tau >= 0");
  }
  const double eps = p.eps;
  const double g = p.gamma;
  const double mean_term = (S - s) * (S - s) * p.amplitude * p.amplitude;
  double v = mean_term;
  if (eps > 0.0) {
    v += S * S * g * eps / (1.0 - eps) * std::exp(-g * (1.0 - eps) * tau / 2.0);
    v += (S * S - 1.0) * g * eps / (1.0 + eps) * std::exp(-g * (1.0 + eps) * tau / 2.0);
  }
  return {v, tau == 0.0};
}

}  // namespace phasetrack
