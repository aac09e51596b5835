#pragma once

// Independent reference computations used only by the tests.

#include <cmath>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>

namespace oracle {

/// Phase Fisher information per unit gamma in the noise of a homodyne
/// current, from the Whittle formula (1 / 4 pi) int (d_theta S / S)^2 dw
/// applied to the spectral density of the squeezed-cavity output, with the
/// local oscillator at angle `phi_minus_Theta` from the system phase.
inline double whittle_noise_information(double eps, double phi_minus_Theta) {
  const double s2 = std::sin(phi_minus_Theta) * std::sin(phi_minus_Theta);
  const double ds2 = std::sin(2.0 * phi_minus_Theta);
  const double by = 0.25 * (1.0 - eps) * (1.0 - eps);
  const double bx = 0.25 * (1.0 + eps) * (1.0 + eps);
  auto integrand = [&](double w) {
    const double ly = eps / (by + w * w);
    const double lx = eps / (bx + w * w);
    const double spec = 1.0 + s2 * ly - (1.0 - s2) * lx;
    const double dspec = ds2 * (ly + lx);
    const double q = dspec / spec;
    return q * q;
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double half = integrator.integrate(integrand, 1e-13);
  return half / (2.0 * std::numbers::pi);
}

/// Likelihood of one homodyne current sample for each hypothesised phase,
/// by brute-force summation over an (x, y) lattice of the Gaussian prior
/// times the Gaussian measurement density. Returns normalised weights.
inline std::vector<double> lattice_bayes_weights(const std::vector<double>& thetas, double current, double phi,
                                                 double amplitude, double gamma, double eps, double dt,
                                                 int points = 41) {
  const double sx = 1.0 / std::sqrt(1.0 + eps);
  const double sy = 1.0 / std::sqrt(1.0 - eps);
  const double span = 8.0;
  const double hx = 2.0 * span * sx / (points - 1);
  const double hy = 2.0 * span * sy / (points - 1);
  std::vector<double> w;
  double total = 0.0;
  for (double th : thetas) {
    const double c = std::cos(phi - th), s = std::sin(phi - th);
    double acc = 0.0;
    for (int i = 0; i < points; ++i) {
      const double x = -span * sx + i * hx;
      for (int j = 0; j < points; ++j) {
        const double y = -span * sy + j * hy;
        const double prior = std::exp(-0.5 * (x * x / (sx * sx) + y * y / (sy * sy)));
        const double mean = c * std::sqrt(gamma) * x + s * (std::sqrt(gamma) * y + amplitude);
        const double r = current - mean;
        acc += prior * std::exp(-0.5 * dt * r * r);
      }
    }
    w.push_back(acc);
    total += acc;
  }
  for (double& v : w) v /= total;
  return w;
}

}  // namespace oracle
