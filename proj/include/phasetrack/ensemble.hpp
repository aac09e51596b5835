#pragma once

// Monte Carlo ensembles: simulate many independent trajectories, run the
// filters on each record, and pool the phase errors into Holevo variances.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <vector>

#include "phasetrack/angles.hpp"
#include "phasetrack/bayes_filter.hpp"
#include "phasetrack/beam.hpp"
#include "phasetrack/error.hpp"
#include "phasetrack/holevo.hpp"
#include "phasetrack/linear_filter.hpp"
#include "phasetrack/rng.hpp"
#include "phasetrack/sde.hpp"
#include "phasetrack/theory.hpp"

namespace phasetrack {

/// Times are in units of 1/chi.
struct RunProtocol {
  double duration_chi = 130.0;
  double burn_in_chi = 30.0;
  double stride_chi = 0.1;
  std::size_t n_trajectories = 1024;
  std::uint64_t seed = 1;
  double dt_eta = kDefaultDtEta;
  /// Fine noise draws per step. A run with (eta, m) and one with (eta / m, 1)
  /// integrate the same Brownian path.
  int noise_substeps = 1;
  unsigned threads = 0;  ///< 0 picks the hardware concurrency
  double phase_offset = 0.0;  ///< added to every initial system phase
  std::size_t bayes_grid = kDefaultGridSize;
  HolevoDefinition definition = HolevoDefinition::real_part;

  void validate() const {
    if (!(duration_chi > 0.0)) throw ConfigError("duration must be positive");
    if (!(burn_in_chi >= 0.0 && burn_in_chi < duration_chi)) {
      throw ConfigError("burn-in must be non-negative and shorter than the duration");
    }
    if (!(stride_chi > 0.0)) throw ConfigError("sample stride must be positive");
    if (n_trajectories == 0) throw ConfigError("need at least one trajectory");
    if (!(dt_eta > 0.0 && dt_eta <= 1.0)) throw ConfigError("dt_eta must lie in (0, 1]");
    if (noise_substeps < 1) throw ConfigError("noise_substeps must be >= 1");
  }
};

struct FilterParams {
  double chi = 1.0;
  double delta = 0.5;  ///< ignored for heterodyne detection
};

enum class EstimatorSet { linear, bayes, both };

/// Per-trajectory output.
struct TrajectoryResult {
  ErrorMoments linear;
  ErrorMoments bayes;
  double sum_sq_difference = 0.0;  ///< sum of wrap(linear - bayes)^2
  std::size_t n_difference = 0;
  std::size_t undefined = 0;  ///< samples where an estimator was undefined
};

inline unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? hw : 1;
}

/// Run body(i) for i in [0, n) on up to `threads` workers. Each index is
/// processed exactly once; callers write results into per-index slots, which
/// keeps the output independent of scheduling. The first exception thrown by
/// any worker is rethrown here.
inline void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Simulate one trajectory and collect phase errors in [burn-in, duration].
///
/// The system phase starts uniformly random and the local oscillator starts
/// at an independent random phase; the Bayes prior is flat. After processing
/// the sample taken over step n, each estimate is compared with the system
/// phase in force during that step.
inline TrajectoryResult run_trajectory(Detection detection, const BeamParams& p,
                                       const FilterParams& f, const RunProtocol& proto,
                                       EstimatorSet estimators, std::size_t index) {
  const bool want_linear = estimators != EstimatorSet::bayes;
  const bool want_bayes = estimators != EstimatorSet::linear;
  NormalStream rng(proto.seed, index);
  const double theta0 = -kPi + kTwoPi * rng.uniform() + proto.phase_offset;
  const double phi_init = -kPi + kTwoPi * rng.uniform() + proto.phase_offset;
  TrajectoryState state = stationary_state(p, rng, theta0);

  const double dt = choose_dt(p, f.chi, proto.dt_eta);
  const double inv_chi = 1.0 / f.chi;
  const std::size_t n_steps = record_length(proto.duration_chi * inv_chi, dt);
  const std::size_t burn = static_cast<std::size_t>(std::ceil(proto.burn_in_chi * inv_chi / dt - 1e-9));
  const std::size_t stride = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(proto.stride_chi * inv_chi / dt)));

  LinearFilterState lin = make_linear_filter(f.chi, detection == Detection::adaptive ? f.delta : 0.0, phi_init);
  HeterodyneLinearState het{{0.0, 0.0}, f.chi};
  std::optional<BayesState> bayes;
  if (want_bayes) bayes = make_bayes_state(p.eps, proto.bayes_grid);

  TrajectoryResult res;
  for (std::size_t n = 0; n < n_steps; ++n) {
    const double theta_n = state.theta;
    StepOutput out;
    if (detection == Detection::adaptive) {
      const double phi = lin.phi;
      out = step_homodyne(state, p, phi, dt, rng, proto.noise_substeps);
      const double current = out.current.real();
      if (want_bayes) bayes_update_homodyne(*bayes, current, phi, p, dt);
      linear_update(lin, current, dt);
    } else {
      out = step_heterodyne(state, p, dt, rng, proto.noise_substeps);
      if (want_linear) linear_update(het, out.current, dt);
      if (want_bayes) bayes_update_heterodyne(*bayes, out.current, p, dt);
    }

    if (n >= burn && (n - burn) % stride == 0) {
      std::optional<double> lin_est, bayes_est;
      if (want_linear) {
        lin_est = detection == Detection::adaptive ? linear_estimate(lin) : linear_estimate(het);
        if (lin_est) res.linear.add(*lin_est - theta_n);
        else ++res.undefined;
      }
      if (want_bayes) {
        bayes_est = bayes_estimate(*bayes);
        if (bayes_est) res.bayes.add(*bayes_est - theta_n);
        else ++res.undefined;
      }
      if (lin_est && bayes_est) {
        const double d = wrap_angle(*lin_est - *bayes_est);
        res.sum_sq_difference += d * d;
        ++res.n_difference;
      }
    }
    if (want_bayes) bayes_diffuse(*bayes, p.kappa, dt);
    state = out.state;
  }
  return res;
}

struct EnsembleResult {
  VarianceEstimate linear;
  VarianceEstimate bayes;
  double dt = 0.0;
  std::size_t undefined = 0;
  std::vector<TrajectoryResult> trajectories;
};

inline EnsembleResult run_ensemble_detailed(Detection detection, const BeamParams& p,
                                            const FilterParams& f, const RunProtocol& proto,
                                            EstimatorSet estimators) {
  proto.validate();
  if (!(f.chi > 0.0)) throw ConfigError("chi must be positive");
  if (detection == Detection::adaptive && !(f.delta >= 0.0 && f.delta <= 1.0)) {
    throw ConfigError("delta must lie in [0, 1]");
  }
  EnsembleResult out;
  out.dt = choose_dt(p, f.chi, proto.dt_eta);
  check_step_stability(p, out.dt);
  out.trajectories.resize(proto.n_trajectories);
  parallel_for(proto.n_trajectories, proto.threads, [&](std::size_t i) {
    out.trajectories[i] = run_trajectory(detection, p, f, proto, estimators, i);
  });
  std::vector<ErrorMoments> lin, bay;
  lin.reserve(out.trajectories.size());
  bay.reserve(out.trajectories.size());
  for (const auto& t : out.trajectories) {
    lin.push_back(t.linear);
    bay.push_back(t.bayes);
    out.undefined += t.undefined;
  }
  if (estimators != EstimatorSet::bayes) out.linear = holevo_jackknife(lin, proto.definition);
  if (estimators != EstimatorSet::linear) out.bayes = holevo_jackknife(bay, proto.definition);
  return out;
}

/// Holevo variance of one estimator over the ensemble.
inline VarianceEstimate run_ensemble(Detection detection, const BeamParams& p, const FilterParams& f,
                                     const RunProtocol& proto,
                                     EstimatorSet estimator = EstimatorSet::linear) {
  if (estimator == EstimatorSet::both) throw ConfigError("run_ensemble reports a single estimator");
  const auto r = run_ensemble_detailed(detection, p, f, proto, estimator);
  return estimator == EstimatorSet::linear ? r.linear : r.bayes;
}

/// Delete-one jackknife standard error of a statistic of the ensemble.
/// `leave_out(i)` evaluates the statistic with trajectory i removed.
inline double jackknife_std_error(std::size_t n, const std::function<double(std::size_t)>& leave_out) {
  if (n < 2) return 0.0;
  std::vector<double> v(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = leave_out(i);
    mean += v[i];
  }
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss * static_cast<double>(n - 1) / static_cast<double>(n));
}

struct EstimatorComparison {
  VarianceEstimate linear;
  VarianceEstimate bayes;
  double ratio = 0.0;  ///< v_linear / v_bayes
  double ratio_std_error = 0.0;
  double msd_fraction = 0.0;  ///< mean-square estimate difference / v_bayes
  double msd_std_error = 0.0;
};

/// Run both estimators on the same records. The local oscillator is steered
/// by the linear filter in both cases.
inline EstimatorComparison compare_estimators(Detection detection, const BeamParams& p,
                                              const FilterParams& f, const RunProtocol& proto) {
  const auto r = run_ensemble_detailed(detection, p, f, proto, EstimatorSet::both);
  EstimatorComparison c;
  c.linear = r.linear;
  c.bayes = r.bayes;
  ErrorMoments lin_total, bay_total;
  double sq_total = 0.0;
  std::size_t nd_total = 0;
  for (const auto& t : r.trajectories) {
    lin_total += t.linear;
    bay_total += t.bayes;
    sq_total += t.sum_sq_difference;
    nd_total += t.n_difference;
  }
  const auto def = proto.definition;
  auto ratio_of = [&](const ErrorMoments& l, const ErrorMoments& b) {
    return holevo_from_moments(l, def) / holevo_from_moments(b, def);
  };
  auto msd_of = [&](double sq, std::size_t nd, const ErrorMoments& b) {
    return nd > 0 ? (sq / static_cast<double>(nd)) / holevo_from_moments(b, def) : 0.0;
  };
  c.ratio = ratio_of(lin_total, bay_total);
  c.msd_fraction = msd_of(sq_total, nd_total, bay_total);
  const std::size_t n = r.trajectories.size();
  c.ratio_std_error = jackknife_std_error(n, [&](std::size_t i) {
    ErrorMoments l = lin_total, b = bay_total;
    l -= r.trajectories[i].linear;
    b -= r.trajectories[i].bayes;
    return ratio_of(l, b);
  });
  c.msd_std_error = jackknife_std_error(n, [&](std::size_t i) {
    ErrorMoments b = bay_total;
    b -= r.trajectories[i].bayes;
    return msd_of(sq_total - r.trajectories[i].sum_sq_difference,
                  nd_total - r.trajectories[i].n_difference, b);
  });
  return c;
}

struct CovarianceCheck {
  std::vector<double> lags;  ///< in units of time
  std::vector<double> empirical;
  std::vector<double> theory;
  std::vector<double> std_error;
  double max_deviation = 0.0;  ///< worst |empirical - theory| / std_error
};

/// Compare the empirical lag covariance of dI = I - S E in a homodyne record
/// taken at fixed phases (kappa = 0, sin(Phi - Theta) = S) with the analytic
/// form. The shortest lag is one step; the others are 1, 2 and 4 times
/// 1/gamma, rounded to whole steps.
inline CovarianceCheck covariance_check(const BeamParams& p, double phi_minus_Theta,
                                        const std::vector<RecordRow>& record, double dt) {
  if (record.size() < 16) throw ConfigError("covariance_check needs a longer record");
  const double S = std::sin(phi_minus_Theta);
  std::vector<double> di(record.size());
  for (std::size_t i = 0; i < record.size(); ++i) di[i] = record[i].current.real() - S * p.amplitude;

  std::vector<std::size_t> lag_steps{1};
  if (p.gamma > 0.0) {
    for (double m : {1.0, 2.0, 4.0}) {
      lag_steps.push_back(std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(m / (p.gamma * dt)))));
    }
  }
  CovarianceCheck out;
  for (std::size_t L : lag_steps) {
    if (L >= di.size()) continue;
    const std::size_t m = di.size() - L;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double prod = di[i] * di[i + L];
      sum += prod;
      sum2 += prod * prod;
    }
    const double mean = sum / static_cast<double>(m);
    const double var = sum2 / static_cast<double>(m) - mean * mean;
    const double tau = static_cast<double>(L) * dt;
    const double th = analytic_current_covariance(p, S, S, tau).value;
    const double se = std::sqrt(var / static_cast<double>(m));
    out.lags.push_back(tau);
    out.empirical.push_back(mean);
    out.theory.push_back(th);
    out.std_error.push_back(se);
    out.max_deviation = std::max(out.max_deviation, std::abs(mean - th) / se);
  }
  return out;
}

}  // namespace phasetrack
