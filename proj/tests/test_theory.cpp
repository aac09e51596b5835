#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "phasetrack/theory.hpp"

using namespace phasetrack;

namespace {

constexpr double kPiD = std::numbers::pi;
const double kCapR = 0.5 * std::log(2.0);

double max_g_over_e3r(double r) {
  double best = 0.0;
  for (int i = 0; i < 4096; ++i) {
    const double ang = -kPiD + 2.0 * kPiD * (i + 0.5) / 4096.0;
    best = std::max(best, noise_info_g(r, ang) / std::exp(3.0 * r));
  }
  return best;
}

}  // namespace

TEST(Beam, EpsilonExamples) {
  EXPECT_EQ(epsilon_from_r(0.0), 0.0);
  EXPECT_NEAR(epsilon_from_r(kCapR), (std::sqrt(2.0) - 1.0) / (std::sqrt(2.0) + 1.0), 1e-15);
  EXPECT_NEAR(epsilon_from_r(kCapR), 0.17157, 1e-5);
  for (double r : {0.1, 1.0, 3.0}) EXPECT_NEAR(r_from_epsilon(epsilon_from_r(r)), r, 1e-12);
  EXPECT_THROW(epsilon_from_r(-0.1), ConfigError);
}

TEST(Beam, ExpRIdentity) {
  for (double r : {0.0, 0.3, 1.0, 2.5}) {
    const double e = epsilon_from_r(r);
    EXPECT_NEAR(std::exp(r), (1.0 + e) / (1.0 - e), 1e-12 * std::exp(r));
  }
}

TEST(Beam, FluxExamples) {
  EXPECT_DOUBLE_EQ(photon_flux(2.0, 123.0, 0.0), 1.0);
  EXPECT_NEAR(photon_flux(0.0, 16.0, kCapR), 1.0, 1e-14);
  for (double r : {0.0, 0.5, 1.5}) {
    const double e = amplitude_from_flux(50.0, 10.0, r);
    EXPECT_NEAR(photon_flux(e, 10.0, r), 50.0, 1e-12 * 50.0);
  }
  EXPECT_THROW(amplitude_from_flux(1.0, 1000.0, 2.0), ConfigError);
  EXPECT_THROW(BeamParams::from_flux(1.0, 1000.0, 2.0), ConfigError);
  const auto p = BeamParams::from_flux(7.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(p.amplitude * p.amplitude / 4.0, 7.0);
}

TEST(Beam, SchemeParsingAndCaps) {
  const auto s = SchemeConfig::parse("adaptive-limited");
  EXPECT_EQ(s.detection, Detection::adaptive);
  EXPECT_EQ(s.squeezing, SqueezingMode::limited);
  EXPECT_NEAR(std::exp(2.0 * s.max_r()), 2.0, 1e-12);
  EXPECT_TRUE(s.admits(s.max_r()));
  EXPECT_FALSE(s.admits(s.max_r() * 1.01));
  EXPECT_FALSE(SchemeConfig::parse("heterodyne-coherent").admits(0.1));
  EXPECT_THROW(SchemeConfig::parse("homodyne-coherent"), ConfigError);
  EXPECT_EQ(all_schemes().size(), 6u);
}

TEST(SteadyState, CoherentIsUnit) {
  for (double ang : {0.0, 0.4, 1.3, 2.9}) {
    const auto g = steady_state_g_matrix(0.0, ang);
    EXPECT_NEAR(g.a, 1.0, 1e-14);
    EXPECT_NEAR(g.b, 0.0, 1e-14);
    EXPECT_NEAR(g.d, 1.0, 1e-14);
  }
}

TEST(SteadyState, AlignedValues) {
  for (double r : {0.3, 1.0, 2.0}) {
    const double eps = epsilon_from_r(r);
    const auto g = steady_state_g_matrix(r, 0.0);
    EXPECT_NEAR(g.a, 1.0 - eps, 1e-14);
    EXPECT_NEAR(g.b, 0.0, 1e-14);
    EXPECT_NEAR(g.d, 1.0 / (1.0 - eps), 1e-13);
    EXPECT_NEAR(g.lambda.real(), 1.0 / (std::exp(r) + 1.0), 1e-14);
  }
}

TEST(SteadyState, SimultaneousEquationsOnGrid) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const double r = 3.0 * i / 49.0;
    for (int j = 0; j < 50; ++j) {
      const double ang = kPiD * j / 50.0;
      const auto g = steady_state_g_matrix(r, ang);
      worst = std::max(worst, std::abs(g.a * g.a - 2.0 * (g.a * g.X + g.b * g.Y)));
      worst = std::max(worst, std::abs(g.b * g.b + 2.0 * (g.X * g.d - g.Y * g.b) - 1.0));
      worst = std::max(worst, std::abs(g.b * g.a - g.Y * (g.a + g.d)));
      EXPECT_GT(g.a, 0.0);
      EXPECT_GT(g.d, 0.0);
      const double q = g.X * g.X + g.Y * g.Y;
      EXPECT_NEAR(g.delta * g.delta / 2.0, std::sqrt(q * q + g.Y * g.Y) - q, 1e-12);
      EXPECT_NEAR(2.0 * g.lambda.real(), g.a, 1e-14);
      EXPECT_NEAR(2.0 * g.lambda.imag(), g.delta, 1e-14);
    }
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(SteadyState, SpecPoint) {
  const auto g = steady_state_g_matrix(1.0, 0.3);
  EXPECT_LT(std::abs(g.a * g.a - 2.0 * (g.a * g.X + g.b * g.Y)), 1e-10);
  EXPECT_LT(std::abs(g.b * g.b + 2.0 * (g.X * g.d - g.Y * g.b) - 1.0), 1e-10);
  EXPECT_LT(std::abs(g.b * g.a - g.Y * (g.a + g.d)), 1e-10);
}

TEST(SteadyState, OmegaContinuousThroughYZero) {
  for (double r : {0.5, 1.0, 2.0}) {
    const auto at0 = steady_state_g_matrix(r, 0.0);
    const auto near = steady_state_g_matrix(r, 1e-6 / epsilon_from_r(r));
    EXPECT_NEAR(near.omega.real(), at0.omega.real(), 1e-4);
    EXPECT_NEAR(near.omega.imag(), at0.omega.imag(), 1e-4);
  }
}

TEST(InfoIdentity, Examples) {
  EXPECT_LT(info_identity_check(0.0, 0.7), 1e-10);
  EXPECT_LT(info_identity_check(1.0, 0.0), 1e-10);
  const auto g = steady_state_g_matrix(1.0, 0.0);
  EXPECT_NEAR(std::pow(1.0 - (g.omega / g.lambda).real(), 2), std::exp(2.0), 1e-10);
  EXPECT_LT(info_identity_check(2.0, kPiD / 4.0), 1e-8);
}

TEST(InfoIdentity, Grid) {
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    for (int j = 0; j < 50; ++j) {
      worst = std::max(worst, info_identity_check(3.0 * i / 49.0, kPiD * j / 50.0));
    }
  }
  EXPECT_LT(worst, 1e-8);
}

TEST(NoiseInfoF, CurvatureMatchesG) {
  for (auto [r, ang] : {std::pair{0.5, 0.2}, std::pair{1.0, 0.5}}) {
    const double h = 1e-3;
    const double f0 = noise_info_f(r, ang, 0.0);
    const double fd = (noise_info_f(r, ang, h) - 2.0 * f0 + noise_info_f(r, ang, -h)) / (h * h);
    const double g = noise_info_g(r, ang);
    EXPECT_NEAR(0.5 * fd / g, 1.0, 1e-4) << "r=" << r << " angle=" << ang;
  }
}

TEST(NoiseInfoF, FlatForCoherent) {
  for (double t : {-0.5, 0.0, 0.3}) {
    const double h = 1e-4;
    const double d = (noise_info_f(0.0, 0.4, t + h) - noise_info_f(0.0, 0.4, t - h)) / (2.0 * h);
    EXPECT_LT(std::abs(d), 1e-8);
  }
}

TEST(NoiseInfoF, RegressionAnchor) {
  // Recorded from the first evaluation; guards against silent changes.
  EXPECT_NEAR(noise_info_f(1.0, 0.3, 0.1), -0.22630151536768017, 1e-12);
}

TEST(NoiseInfoG, VanishesWithoutSqueezing) {
  for (double ang : {0.0, 0.7, 2.0}) EXPECT_EQ(noise_info_g(0.0, ang), 0.0);
}

TEST(NoiseInfoG, NonNegative) {
  for (double r : {0.1, 0.7, 1.5, 3.0}) {
    for (int i = 0; i < 200; ++i) EXPECT_GE(noise_info_g(r, -kPiD + 2.0 * kPiD * i / 200.0), -1e-12);
  }
}

TEST(NoiseInfoG, BoundedByQuarterExp3r) {
  for (int k = 1; k <= 12; ++k) {
    const double r = 0.25 * k;
    EXPECT_LE(max_g_over_e3r(r), 0.25) << "r=" << r;
  }
}

TEST(NoiseInfoG, MatchesWhittleSpectralInformation) {
  for (auto [r, ang] : {std::pair{0.5, 0.2}, std::pair{1.0, 0.5}, std::pair{1.0, 0.05}, std::pair{2.0, 0.3},
                        std::pair{0.1, 1.0}, std::pair{1.0, 1.5}, std::pair{3.0, 0.01}}) {
    const double oracle_value = oracle::whittle_noise_information(epsilon_from_r(r), ang);
    EXPECT_NEAR(noise_info_g(r, ang) / oracle_value, 1.0, 1e-6) << "r=" << r << " angle=" << ang;
  }
}

TEST(NoiseInfoH, Examples) {
  EXPECT_EQ(noise_info_h(0.0), 0.0);
  const double e1 = epsilon_from_r(1.0);
  EXPECT_DOUBLE_EQ(noise_info_h(1.0), std::cosh(1.0) - 1.0 / std::sqrt(e1 * e1 + 1.0));
  const double ratio4 = noise_info_h(4.0) / std::exp(4.0);
  const double ratio6 = noise_info_h(6.0) / std::exp(6.0);
  EXPECT_NEAR(ratio4 / ratio6, 1.0, 0.1);
  double prev = -1.0;
  for (int i = 0; i <= 40; ++i) {
    const double h = noise_info_h(0.1 * i);
    EXPECT_GE(h, 0.0);
    EXPECT_GT(h, prev);
    prev = h;
  }
}

TEST(Heterodyne, SteadyVarianceProduct) {
  for (double r : {0.0, 0.5, 1.0, 3.0}) {
    const auto [vx, vy] = heterodyne_steady_variances(epsilon_from_r(r));
    EXPECT_NEAR(vx * vy, 1.0, 1e-12);
  }
}

TEST(InfoRates, Adaptive) {
  const auto coh = BeamParams::from_flux(25.0, 0.0, 0.0);
  EXPECT_NEAR(adaptive_info_rate(coh, 0.0), 100.0, 1e-12);
  const auto sq = BeamParams::from_flux(100.0, 20.0, 0.8);
  const double e2 = sq.amplitude * sq.amplitude;
  EXPECT_NEAR(adaptive_info_rate(sq, 0.0), e2 * std::exp(1.6) + 20.0 * noise_info_g(0.8, 0.0), 1e-9);
  EXPECT_NEAR(adaptive_info_rate(sq, kPiD / 2.0), 20.0 * noise_info_g(0.8, kPiD / 2.0), 1e-9);
}

TEST(InfoRates, Heterodyne) {
  const auto coh = BeamParams::from_flux(25.0, 0.0, 0.0);
  EXPECT_NEAR(heterodyne_info_rate(coh), 50.0, 1e-12);
  const auto p = BeamParams::from_amplitude(2.0, 1.0, 1.0);
  EXPECT_NEAR(heterodyne_info_rate(p), 4.0 / (1.0 + std::exp(-2.0)) + 2.0 * noise_info_h(1.0), 1e-12);
  const auto big = BeamParams::from_amplitude(2.0, 0.0, 30.0);
  EXPECT_NEAR(heterodyne_info_rate(big), 4.0, 1e-12);
}

TEST(PredictedVariance, AsymptoticConstants) {
  const auto ad = SchemeConfig::parse("adaptive-coherent");
  const auto het = SchemeConfig::parse("heterodyne-coherent");
  BeamParams p0;
  EXPECT_DOUBLE_EQ(predicted_variance(ad, p0), 0.5);
  EXPECT_NEAR(predicted_variance(het, p0), 1.0 / std::sqrt(2.0), 1e-15);
  BeamParams pc;
  pc.r = kCapR;
  EXPECT_NEAR(predicted_variance(ad, pc), 1.0 / std::sqrt(8.0), 1e-15);
  EXPECT_NEAR(predicted_variance(het, pc), std::sqrt(3.0 / 8.0), 1e-15);
  for (double r : {0.2, 1.0}) {
    BeamParams p;
    p.r = r;
    EXPECT_NEAR(predicted_variance(ad, p) / predicted_variance(het, p0), std::exp(-r) / std::sqrt(2.0), 1e-12);
  }
  EXPECT_EQ(asymptotic_constant(SchemeConfig::parse("adaptive-arbitrary")), 0.0);
  EXPECT_DOUBLE_EQ(asymptotic_constant(SchemeConfig::parse("heterodyne-arbitrary")), 0.5);
  EXPECT_NEAR(asymptotic_constant(SchemeConfig::parse("adaptive-limited")), 1.0 / std::sqrt(8.0), 1e-15);
}

TEST(GammaBounds, Examples) {
  const auto b = gamma_bounds(1e6, 1.0, kCapR);
  EXPECT_NEAR(b.lower, 2e3, 1e-9);
  EXPECT_NEAR(b.upper, 16e6, 1e-6);
  EXPECT_TRUE(b.nonempty);
  const auto z = gamma_bounds(10.0, 1.0, 0.0);
  EXPECT_TRUE(std::isinf(z.upper));
  // scaling form crosses at N/kappa = e^{8r} = 16 for e^{2r} = 2
  EXPECT_FALSE(gamma_bounds(15.0, 1.0, kCapR).scaling_nonempty);
  EXPECT_TRUE(gamma_bounds(17.0, 1.0, kCapR).scaling_nonempty);
  EXPECT_THROW(gamma_bounds(1.0, 1.0, -1.0), ConfigError);
}

TEST(ScalingPredictions, Examples) {
  const auto one = scaling_predictions(1.0);
  EXPECT_DOUBLE_EQ(one.variance, 1.0);
  EXPECT_DOUBLE_EQ(one.exp_r, 1.0);
  EXPECT_DOUBLE_EQ(one.gamma_over_kappa, 1.0);
  EXPECT_DOUBLE_EQ(one.chi_over_kappa, 1.0);
  EXPECT_DOUBLE_EQ(one.delta, 1.0);
  const auto big = scaling_predictions(1e8);
  EXPECT_NEAR(big.exp_r, 10.0, 1e-12);
  EXPECT_NEAR(big.gamma_over_kappa, 1e6, 1e-6);
  EXPECT_NEAR(big.chi_over_kappa, 1e5, 1e-7);
  EXPECT_NEAR(big.variance, 1e-5, 1e-17);
  EXPECT_NEAR(big.delta, 100.0, 1e-10);
}

TEST(SqueezingTimescale, Examples) {
  EXPECT_DOUBLE_EQ(squeezing_timescale(0.0, 4.0), 0.5);
  EXPECT_NEAR(squeezing_timescale(kCapR, 1.0), std::sqrt(2.0) + 1.0, 1e-12);
  for (double r : {0.5, 2.0}) {
    const double gamma = 3.0;
    const auto g = steady_state_g_matrix(r, 0.0);
    EXPECT_NEAR(squeezing_timescale(r, gamma), 1.0 / (gamma * g.lambda.real()), 1e-12);
  }
}

TEST(CurrentCovariance, Examples) {
  const auto coh = BeamParams::from_flux(10.0, 5.0, 0.0);
  const auto c = analytic_current_covariance(coh, 0.3, 0.1, 0.7);
  EXPECT_NEAR(c.value, 0.04 * coh.amplitude * coh.amplitude, 1e-12);
  EXPECT_FALSE(c.has_shot_delta);
  const auto sq = BeamParams::from_flux(10.0, 5.0, 0.5);
  const auto z = analytic_current_covariance(sq, 0.0, 0.0, 0.0);
  EXPECT_NEAR(z.value, -5.0 * sq.eps / (1.0 + sq.eps), 1e-12);
  EXPECT_LT(z.value, 0.0);
  EXPECT_TRUE(z.has_shot_delta);
}
