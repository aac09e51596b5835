#pragma once

// Grid Bayesian phase filter. For each hypothesised phase theta_k on a
// uniform grid the cavity quadratures are tracked as a Gaussian (mean xbar_k,
// covariance V_k) by a Kalman filter with correlated process and measurement
// noise, and the log-likelihood of the record accumulates in logP_k. Phase
// diffusion is a circular convolution of the weights.
//
// Each update is the exact Bayes update for the Euler-Maruyama model of one
// step, which includes a -log(1 + gamma dt q)/2 term that the continuum
// equations absorb into an unspecified constant.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "phasetrack/angles.hpp"
#include "phasetrack/beam.hpp"
#include "phasetrack/error.hpp"

namespace phasetrack {

inline constexpr std::size_t kDefaultGridSize = 2000;

/// Log-weights below this (relative to the maximum) are clamped. exp of the
/// floor is still a normal double.
inline constexpr double kLogWeightFloor = -700.0;

/// Circular convolution with the discrete Gaussian kernel exp(-t) I_n(t)
/// (t in grid units squared). The kernel has variance exactly t, sums to one
/// and composes additively in t. Its discrete Fourier transform on K points is
/// exp(-t (1 - cos(2 pi j / K))), so the convolution is applied spectrally.
class PhaseDiffuser {
 public:
  void apply(std::vector<double>& weights, double t) {
    const std::size_t K = weights.size();
    if (K != size_ || t != t_) prepare(K, t);
    fft_.fwd(spectrum_, weights);
    for (std::size_t j = 0; j < spectrum_.size(); ++j) spectrum_[j] *= multiplier_[j];
    fft_.inv(weights, spectrum_);
  }

 private:
  void prepare(std::size_t K, double t) {
    size_ = K;
    t_ = t;
    multiplier_.resize(K);
    for (std::size_t j = 0; j < K; ++j) {
      const double w = kTwoPi * static_cast<double>(j) / static_cast<double>(K);
      multiplier_[j] = std::exp(-t * (1.0 - std::cos(w)));
    }
  }

  Eigen::FFT<double> fft_;
  std::vector<std::complex<double>> spectrum_;
  std::vector<double> multiplier_;
  std::size_t size_ = 0;
  double t_ = -1.0;
};

struct BayesState {
  std::vector<double> theta;
  std::vector<double> cos_theta, sin_theta;
  std::vector<double> logp;  ///< max is 0 after every update
  std::vector<double> x0, x1;  ///< conditional means of (x, y)
  std::vector<double> v00, v01, v11;  ///< conditional covariances
  double log_norm = 0.0;  ///< log sum_k exp(logp_k) (2 pi / K)
  std::size_t repairs = 0;  ///< covariance repairs performed so far
  PhaseDiffuser diffuser;
  std::vector<double> scratch;

  std::size_t size() const { return theta.size(); }
  double spacing() const { return kTwoPi / static_cast<double>(theta.size()); }

  /// Inverse covariance at grid point k as (G00, G01, G11).
  std::array<double, 3> g_matrix(std::size_t k) const {
    const double det = v00[k] * v11[k] - v01[k] * v01[k];
    return {v11[k] / det, -v01[k] / det, v00[k] / det};
  }

  /// Normalised density at grid point k: sum_k p_k (2 pi / K) = 1.
  double density(std::size_t k) const { return std::exp(logp[k] - log_norm); }
};

/// Flat prior over (-pi, pi] with the quadratures at their unconditioned
/// stationary distribution, which is the same for every theta.
inline BayesState make_bayes_state(double eps, std::size_t K = kDefaultGridSize) {
  if (K < 3) throw ConfigError("Bayes grid needs at least 3 points");
  if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("epsilon must lie in [0, 1)");
  BayesState s;
  const double h = kTwoPi / static_cast<double>(K);
  s.theta.resize(K);
  s.cos_theta.resize(K);
  s.sin_theta.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    s.theta[k] = -kPi + static_cast<double>(k + 1) * h;
    s.cos_theta[k] = std::cos(s.theta[k]);
    s.sin_theta[k] = std::sin(s.theta[k]);
  }
  s.logp.assign(K, 0.0);
  s.x0.assign(K, 0.0);
  s.x1.assign(K, 0.0);
  s.v00.assign(K, 1.0 / (1.0 + eps));
  s.v01.assign(K, 0.0);
  s.v11.assign(K, 1.0 / (1.0 - eps));
  s.log_norm = std::log(kTwoPi);
  return s;
}

namespace detail {

// Symmetrise and floor the eigenvalues of a 2x2 covariance. Returns false if
// it was already positive definite.
inline bool repair_covariance(double& a, double& b, double& d) {
  if (a > 0.0 && d > 0.0 && a * d - b * b > 0.0) return false;
  const double mean = 0.5 * (a + d);
  const double rad = std::hypot(0.5 * (a - d), b);
  constexpr double floor = 1e-12;
  double l1 = std::max(mean + rad, floor);
  double l2 = std::max(mean - rad, floor);
  // eigenvector of the larger eigenvalue
  double ux = b, uy = l1 - a;
  if (std::hypot(ux, uy) < 1e-300) {
    ux = 1.0;
    uy = 0.0;
    if (d > a) std::swap(l1, l2);
  }
  const double n = std::hypot(ux, uy);
  ux /= n;
  uy /= n;
  a = l1 * ux * ux + l2 * uy * uy;
  b = (l1 - l2) * ux * uy;
  d = l1 * uy * uy + l2 * ux * ux;
  return true;
}

inline void renormalise(BayesState& s) {
  const double top = *std::max_element(s.logp.begin(), s.logp.end());
  double sum = 0.0;
  for (double& l : s.logp) {
    l = std::max(l - top, kLogWeightFloor);
    sum += std::exp(l);
  }
  s.log_norm = std::log(sum * s.spacing());
}

inline void check_repairs(BayesState& s, std::size_t repaired_now) {
  s.repairs += repaired_now;
  if (repaired_now * 10 > s.size()) {
    throw NumericalError("filters", "conditional covariances lost positive definiteness");
  }
}

}  // namespace detail

/// One homodyne sample taken with the local oscillator at `phi`.
inline void bayes_update_homodyne(BayesState& s, double current, double phi, const BeamParams& p,
                                  double dt) {
  const double g = p.gamma;
  const double sg = std::sqrt(g);
  const double gdt = g * dt;
  const double sgdt = sg * dt;
  const double cphi = std::cos(phi), sphi = std::sin(phi);
  const double dx = gdt * 0.5 * (1.0 + p.eps);
  const double dy = gdt * 0.5 * (1.0 - p.eps);
  std::size_t repaired = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double c = cphi * s.cos_theta[k] + sphi * s.sin_theta[k];
    const double sn = sphi * s.cos_theta[k] - cphi * s.sin_theta[k];
    double a = s.v00[k], b = s.v01[k], d = s.v11[k];
    double m0 = s.x0[k], m1 = s.x1[k];

    // measurement
    const double z = current - sn * p.amplitude;
    const double va0 = a * c + b * sn;
    const double va1 = b * c + d * sn;
    const double q = c * va0 + sn * va1;
    const double innov = z - sg * (c * m0 + sn * m1);
    const double den = 1.0 + gdt * q;
    s.logp[k] += -0.5 * std::log1p(gdt * q) - 0.5 * dt * innov * innov / den;
    const double gain = sgdt * innov / den;
    m0 += va0 * gain;
    m1 += va1 * gain;
    const double shrink = gdt / den;
    a -= shrink * va0 * va0;
    b -= shrink * va0 * va1;
    d -= shrink * va1 * va1;

    // dynamics, with the noise shared between current and cavity removed
    const double f00 = 1.0 - dx + gdt * c * c;
    const double f11 = 1.0 - dy + gdt * sn * sn;
    const double f01 = gdt * c * sn;
    s.x0[k] = f00 * m0 + f01 * m1 - sgdt * z * c;
    s.x1[k] = f01 * m0 + f11 * m1 - sgdt * z * sn;
    // F V F^T with F symmetric
    const double t00 = f00 * a + f01 * b, t01 = f00 * b + f01 * d;
    const double t10 = f01 * a + f11 * b, t11 = f01 * b + f11 * d;
    a = t00 * f00 + t01 * f01 + gdt * sn * sn;
    b = t00 * f01 + t01 * f11 - gdt * sn * c;
    d = t10 * f01 + t11 * f11 + gdt * c * c;
    if (detail::repair_covariance(a, b, d)) ++repaired;
    s.v00[k] = a;
    s.v01[k] = b;
    s.v11[k] = d;
  }
  detail::check_repairs(s, repaired);
  detail::renormalise(s);
}

/// One complex heterodyne sample. In the frame of theta_k the two quadratures
/// decouple and are filtered independently.
inline void bayes_update_heterodyne(BayesState& s, std::complex<double> current,
                                    const BeamParams& p, double dt) {
  const double hg = std::sqrt(p.gamma / 2.0);
  const double hdt = hg * dt;
  const double half_gdt = 0.5 * p.gamma * dt;
  const double ax = 1.0 - half_gdt * p.eps;
  const double ay = 1.0 + half_gdt * p.eps;
  const double mean_im = p.amplitude / std::sqrt(2.0);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double jx = current.real() * s.cos_theta[k] + current.imag() * s.sin_theta[k];
    const double jy = current.imag() * s.cos_theta[k] - current.real() * s.sin_theta[k] - mean_im;

    double vx = s.v00[k], mx = s.x0[k];
    double den = 1.0 + half_gdt * vx;
    double innov = jx - hg * mx;
    double dlog = -0.5 * std::log(den) - 0.5 * dt * innov * innov / den;
    mx += hdt * vx * innov / den;
    vx /= den;
    s.x0[k] = ax * mx - hdt * jx;
    s.v00[k] = ax * ax * vx + half_gdt;

    double vy = s.v11[k], my = s.x1[k];
    den = 1.0 + half_gdt * vy;
    innov = jy - hg * my;
    dlog += -0.5 * std::log(den) - 0.5 * dt * innov * innov / den;
    my += hdt * vy * innov / den;
    vy /= den;
    s.x1[k] = ay * my - hdt * jy;
    s.v11[k] = ay * ay * vy + half_gdt;

    s.logp[k] += dlog;
  }
  detail::renormalise(s);
}

/// Convolve the phase weights with the kernel of variance kappa dt. Means and
/// covariances are left alone.
inline void bayes_diffuse(BayesState& s, double kappa, double dt) {
  const double variance = kappa * dt;
  if (!(variance > 0.0)) return;
  const double h = s.spacing();
  std::vector<double>& p = s.scratch;
  p.resize(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) p[k] = std::exp(s.logp[k]);
  s.diffuser.apply(p, variance / (h * h));
  // Round-off from the transform can leave tiny negative values.
  for (std::size_t k = 0; k < s.size(); ++k) {
    s.logp[k] = p[k] > 1e-300 ? std::log(p[k]) : kLogWeightFloor;
  }
  detail::renormalise(s);
}

/// arg sum_k P_k e^{i theta_k}, or nothing when the resultant vanishes.
inline std::optional<double> bayes_estimate(const BayesState& s) {
  double re = 0.0, im = 0.0, total = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double w = std::exp(s.logp[k]);
    re += w * s.cos_theta[k];
    im += w * s.sin_theta[k];
    total += w;
  }
  if (std::hypot(re, im) < 1e-10 * total) return std::nullopt;
  return std::atan2(im, re);
}

/// Snapshot with header `theta,logP,xbar0,xbar1,G00,G01,G11`. logP is the
/// normalised log density.
inline void write_bayes_snapshot(std::ostream& os, const BayesState& s) {
  os << "theta,logP,xbar0,xbar1,G00,G01,G11\n";
  os.precision(17);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto g = s.g_matrix(k);
    os << s.theta[k] << ',' << s.logp[k] - s.log_norm << ',' << s.x0[k] << ',' << s.x1[k] << ','
       << g[0] << ',' << g[1] << ',' << g[2] << '\n';
  }
}

}  // namespace phasetrack
