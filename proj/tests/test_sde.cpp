#include <cmath>
#include <complex>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "phasetrack/ensemble.hpp"
#include "phasetrack/sde.hpp"

using namespace phasetrack;

namespace {

struct Moments {
  double n = 0, sum = 0, sum2 = 0;
  void add(double v) {
    n += 1;
    sum += v;
    sum2 += v * v;
  }
  double mean() const { return sum / n; }
  double var() const { return sum2 / n - mean() * mean(); }
};

}  // namespace

TEST(StepHomodyne, VacuumIsPureShotNoise) {
  const auto p = BeamParams::from_amplitude(0.0, 0.0, 0.0, 0.0);
  NormalStream rng(11, 0);
  TrajectoryState s;
  s.x = 0.3;
  s.y = -0.2;
  const double dt = 1e-3;
  Moments m;
  for (int i = 0; i < 100000; ++i) {
    const auto out = step_homodyne(s, p, 0.4, dt, rng);
    EXPECT_EQ(out.state.x, s.x);
    EXPECT_EQ(out.state.y, s.y);
    m.add(out.current.real());
    s = out.state;
  }
  EXPECT_NEAR(m.var() * dt, 1.0, 0.03);
}

TEST(StepHomodyne, QuadratureMeanIsAmplitude) {
  const double E = 3.0;
  const auto p = BeamParams::from_amplitude(E, 4.0, 0.0, 0.0);
  NormalStream rng(12, 0);
  TrajectoryState s = stationary_state(p, rng, 0.0);
  const double dt = choose_dt(p, 0.0);
  // batch means absorb the correlation carried by y
  const int batches = 200, per_batch = 500;
  Moments batch;
  for (int b = 0; b < batches; ++b) {
    double acc = 0.0;
    for (int i = 0; i < per_batch; ++i) {
      const auto out = step_homodyne(s, p, kPi / 2.0, dt, rng);
      acc += out.current.real();
      s = out.state;
    }
    batch.add(acc / per_batch);
  }
  const double se = std::sqrt(batch.var() / batches);
  EXPECT_LT(std::abs(batch.mean() - E), 3.0 * se);
  EXPECT_LT(se, 0.1);
}

TEST(StepHomodyne, PhaseDiffusionVariance) {
  const auto p = BeamParams::from_amplitude(1.0, 0.0, 0.0, 2.0);
  const double T = 1.0, dt = 0.01;
  Moments m;
  for (std::uint64_t k = 0; k < 10000; ++k) {
    NormalStream rng(13, k);
    TrajectoryState s;
    s.theta = 5.0;
    for (int i = 0; i < 100; ++i) s = step_homodyne(s, p, 0.0, dt, rng).state;
    m.add(s.theta - 5.0);
  }
  EXPECT_NEAR(m.var() / (p.kappa * T), 1.0, 0.05);
}

TEST(StepHomodyne, ThetaIsNeverWrapped) {
  const auto p = BeamParams::from_amplitude(1.0, 0.0, 0.0, 100.0);
  NormalStream rng(14, 0);
  TrajectoryState s;
  double widest = 0.0;
  for (int i = 0; i < 20000; ++i) {
    s = step_homodyne(s, p, 0.0, 0.01, rng).state;
    widest = std::max(widest, std::abs(s.theta));
  }
  EXPECT_GT(widest, kPi);
}

TEST(StepHomodyne, RejectsUnstableStep) {
  const auto p = BeamParams::from_amplitude(1.0, 100.0, 1.0);
  NormalStream rng(1, 0);
  const double limit = 2.0 / (p.gamma * (1.0 + p.eps));
  EXPECT_THROW(step_homodyne(TrajectoryState{}, p, 0.0, limit * 1.01, rng), NumericalError);
  EXPECT_NO_THROW(step_homodyne(TrajectoryState{}, p, 0.0, limit * 0.5, rng));
  EXPECT_THROW(step_heterodyne(TrajectoryState{}, p, limit, rng), NumericalError);
}

TEST(StepHeterodyne, VacuumPower) {
  const auto p = BeamParams::from_amplitude(0.0, 0.0, 0.0, 0.0);
  NormalStream rng(21, 0);
  const double dt = 1e-3;
  double acc = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) acc += std::norm(step_heterodyne(TrajectoryState{}, p, dt, rng).current);
  EXPECT_NEAR(acc / n * dt / 2.0, 1.0, 0.03);
}

TEST(StepHeterodyne, MeanCurrent) {
  const double E = 2.5, theta = 0.7, gamma = 9.0;
  const auto p = BeamParams::from_amplitude(E, gamma, 0.4, 0.0);
  const double dt = choose_dt(p, 0.0);
  const std::complex<double> expected =
      std::complex<double>(0.0, 1.0) * std::polar(1.0, theta) * std::sqrt(gamma / 2.0) * (E / std::sqrt(gamma));
  Moments re, im;
  NormalStream rng(22, 0);
  for (int i = 0; i < 100000; ++i) {
    const auto s = stationary_state(p, rng, theta);
    const auto I = step_heterodyne(s, p, dt, rng).current;
    re.add(I.real());
    im.add(I.imag());
  }
  const double n = re.n;
  EXPECT_LT(std::abs(re.mean() - expected.real()), 3.0 * std::sqrt(re.var() / n));
  EXPECT_LT(std::abs(im.mean() - expected.imag()), 3.0 * std::sqrt(im.var() / n));
}

TEST(StepHeterodyne, QuadraturesUncorrelatedWithoutSqueezing) {
  const auto p = BeamParams::from_amplitude(2.0, 5.0, 0.0, 0.0);
  const double dt = choose_dt(p, 0.0);
  NormalStream rng(23, 0);
  TrajectoryState s = stationary_state(p, rng, 0.0);
  const double mean_im = p.amplitude / std::sqrt(2.0);
  double sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto out = step_heterodyne(s, p, dt, rng);
    const double a = out.current.real(), b = out.current.imag() - mean_im;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
    s = out.state;
  }
  EXPECT_LT(std::abs(sxy / std::sqrt(sxx * syy)), 0.01);
}

TEST(Stationary, QuadratureVariances) {
  const auto p = BeamParams::from_amplitude(1.0, 1.0, 0.5, 0.0);
  // eta = 0.01 keeps the Euler-Maruyama variance bias near 0.5%
  const double dt = choose_dt(p, 0.0, 0.01);
  const int steps = static_cast<int>(std::ceil(10.0 / (p.gamma * (1.0 - p.eps)) / dt));
  Moments mx, my;
  double cxy = 0.0;
  for (std::uint64_t k = 0; k < 10000; ++k) {
    NormalStream rng(31, k);
    TrajectoryState s;
    for (int i = 0; i < steps; ++i) s = step_homodyne(s, p, 0.3, dt, rng).state;
    mx.add(s.x);
    my.add(s.y);
    cxy += s.x * s.y;
  }
  EXPECT_NEAR(mx.var() * (1.0 + p.eps), 1.0, 0.03);
  EXPECT_NEAR(my.var() * (1.0 - p.eps), 1.0, 0.03);
  EXPECT_LT(std::abs(cxy / mx.n), 0.03);
}

TEST(ChooseDt, Examples) {
  const auto p = BeamParams::from_amplitude(1.0, 1e3, r_from_epsilon(0.17), 1.0);
  EXPECT_NEAR(choose_dt(p, 1e2), 0.05 * 2.0 / (1e3 * 1.17), 1e-15);
  EXPECT_NEAR(choose_dt(p, 1e2, 0.025), 0.5 * choose_dt(p, 1e2), 1e-18);
  const auto slow = BeamParams::from_amplitude(1.0, 0.5, 0.0, 1.0);
  EXPECT_NEAR(choose_dt(slow, 10.0), 0.05 / 10.0, 1e-15);
  EXPECT_NEAR(choose_dt(slow, 0.1), 0.05, 1e-15);
  EXPECT_THROW(choose_dt(slow, 1.0, 0.0), ConfigError);
}

TEST(SimulateRecord, LengthAndEmpty) {
  const auto p = BeamParams::from_flux(10.0, 0.0, 0.0);
  FixedPhase lo{0.0};
  NormalStream rng(41, 0);
  EXPECT_TRUE(simulate_record(p, Detection::adaptive, lo, TrajectoryState{}, 0.0, 0.01, rng).empty());
  EXPECT_EQ(simulate_record(p, Detection::adaptive, lo, TrajectoryState{}, 1.0, 0.3, rng).size(), 4u);
  EXPECT_EQ(simulate_record(p, Detection::heterodyne, lo, TrajectoryState{}, 1.0, 0.01, rng).size(), 100u);
  EXPECT_EQ(record_length(0.95, 0.1), 10u);
}

TEST(SimulateRecord, Deterministic) {
  const auto p = BeamParams::from_flux(100.0, 20.0, 0.5);
  auto run = [&] {
    NormalStream rng(42, 7);
    LinearFeedback fb{make_linear_filter(10.0, 0.5)};
    auto rec = simulate_record(p, Detection::adaptive, fb, stationary_state(p, rng), 1.0,
                               choose_dt(p, 10.0), rng);
    std::ostringstream os;
    write_record_csv(os, rec, Detection::adaptive);
    return os.str();
  };
  const auto a = run();
  EXPECT_EQ(a, run());
  EXPECT_EQ(a.substr(0, a.find('\n')), "t,I_re,I_im,Phi,Theta");
}

TEST(SimulateRecord, CsvLeavesInapplicableColumnsEmpty) {
  const auto p = BeamParams::from_flux(10.0, 0.0, 0.0);
  FixedPhase lo{0.0};
  NormalStream rng(43, 0);
  const auto rec = simulate_record(p, Detection::heterodyne, lo, TrajectoryState{}, 0.02, 0.01, rng);
  std::ostringstream os;
  write_record_csv(os, rec, Detection::heterodyne);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_NE(line.find(",,"), std::string::npos);
}

TEST(NoiseSubsteps, CoarseStepSeesFineBrownianPath) {
  const auto p = BeamParams::from_amplitude(2.0, 10.0, 0.5, 1.0);
  const double dt = 0.004;
  NormalStream coarse_rng(51, 0), fine_rng(51, 0);
  TrajectoryState coarse, fine;
  for (int i = 0; i < 500; ++i) {
    coarse = step_homodyne(coarse, p, 0.0, dt, coarse_rng, 4).state;
    for (int j = 0; j < 4; ++j) fine = step_homodyne(fine, p, 0.0, dt / 4.0, fine_rng).state;
  }
  EXPECT_NEAR(coarse.theta, fine.theta, 1e-12);
  EXPECT_NEAR(coarse.x, fine.x, 0.05);
  EXPECT_NEAR(coarse.y, fine.y, 0.05);
}
