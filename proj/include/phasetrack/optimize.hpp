#pragma once

// Parameter optimisation for the phase-tracking schemes.
//
// The objective is a Monte Carlo variance, so every evaluation reuses the same
// master seed (common random numbers). That makes the objective a
// deterministic, if slightly rough, function of the parameters, which suits a
// derivative-free simplex search.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "phasetrack/beam.hpp"
#include "phasetrack/ensemble.hpp"
#include "phasetrack/error.hpp"
#include "phasetrack/holevo.hpp"
#include "phasetrack/theory.hpp"

namespace phasetrack {

/// Free parameters of a scheme in kappa = 1 units.
struct SchemeParams {
  double chi = 1.0;
  double delta = 0.5;
  double r = 0.0;
  double gamma = 0.0;
};

struct Evaluation {
  SchemeParams params;
  VarianceEstimate estimate;
  double objective = 0.0;  ///< variance, +inf for infeasible or divergent points
};

struct OptResult {
  SchemeParams best;
  VarianceEstimate best_estimate;
  std::vector<Evaluation> log;
  bool converged = false;
};

// ---------------------------------------------------------------------------
// Nelder-Mead

struct NelderMeadOptions {
  std::size_t max_evaluations = 60;
  double f_tolerance = 2e-3;  ///< relative spread of simplex values
  double x_tolerance = 0.05;  ///< simplex diameter in search coordinates
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = std::numeric_limits<double>::infinity();
  std::size_t evaluations = 0;
  bool converged = false;
};

/// Standard Nelder-Mead (reflection 1, expansion 2, contraction 1/2,
/// shrink 1/2). `step` sets the initial simplex edge on each axis.
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                    std::vector<double> x0, const std::vector<double>& step,
                                    const NelderMeadOptions& opt) {
  const std::size_t n = x0.size();
  NelderMeadResult res;
  if (n == 0) {
    res.x = x0;
    res.f = f(x0);
    res.evaluations = 1;
    res.converged = true;
    return res;
  }
  std::vector<std::vector<double>> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += step[i];
  std::size_t evals = 0;
  auto eval = [&](const std::vector<double>& x) {
    ++evals;
    return f(x);
  };
  for (std::size_t i = 0; i <= n && evals < opt.max_evaluations; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    std::vector<std::vector<double>> p2(n + 1);
    std::vector<double> v2(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      p2[i] = pts[order[i]];
      v2[i] = vals[order[i]];
    }
    pts.swap(p2);
    vals.swap(v2);
  };
  auto blend = [&](const std::vector<double>& a, const std::vector<double>& b, double t) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + t * (b[i] - a[i]);
    return out;
  };

  while (evals < opt.max_evaluations) {
    sort_simplex();
    double diameter = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) diameter = std::max(diameter, std::abs(pts[i][j] - pts[0][j]));
    }
    const double spread = vals[n] - vals[0];
    if (std::isfinite(vals[n]) &&
        spread <= opt.f_tolerance * std::abs(vals[0]) && diameter <= opt.x_tolerance) {
      res.converged = true;
      break;
    }
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);
    }
    const auto xr = blend(centroid, pts[n], -1.0);
    const double fr = eval(xr);
    if (fr < vals[0]) {
      if (evals >= opt.max_evaluations) {
        pts[n] = xr;
        vals[n] = fr;
        break;
      }
      const auto xe = blend(centroid, pts[n], -2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
      continue;
    }
    if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
      continue;
    }
    if (evals >= opt.max_evaluations) break;
    const bool outside = fr < vals[n];
    const auto xc = outside ? blend(centroid, xr, 0.5) : blend(centroid, pts[n], 0.5);
    const double fc = eval(xc);
    if (fc < std::min(fr, vals[n])) {
      pts[n] = xc;
      vals[n] = fc;
      continue;
    }
    if (outside) {
      pts[n] = xr;
      vals[n] = fr;
    }
    for (std::size_t i = 1; i <= n && evals < opt.max_evaluations; ++i) {
      pts[i] = blend(pts[0], pts[i], 0.5);
      vals[i] = eval(pts[i]);
    }
  }
  sort_simplex();
  res.x = pts[0];
  res.f = vals[0];
  res.evaluations = evals;
  return res;
}

// ---------------------------------------------------------------------------
// Scheme objective

/// Which of (chi, delta, e^r, gamma) a scheme optimises.
struct FreeAxes {
  bool chi = true;
  bool delta = false;
  bool r = false;
  bool gamma = false;

  static FreeAxes for_scheme(const SchemeConfig& s) {
    FreeAxes a;
    a.delta = s.detection == Detection::adaptive;
    a.r = s.squeezing != SqueezingMode::coherent;
    a.gamma = a.r;
    return a;
  }
};

/// Map between SchemeParams and unconstrained search coordinates: log chi,
/// delta, log e^r (= r) and log gamma. Coordinates outside [0, 1] for delta
/// or outside the feasible squeezing range are projected back onto it, so the
/// search can settle on an endpoint.
class SearchSpace {
 public:
  SearchSpace(const SchemeConfig& scheme, FreeAxes axes, SchemeParams fixed)
      : scheme_(scheme), axes_(axes), fixed_(fixed) {}

  std::vector<double> encode(const SchemeParams& p) const {
    std::vector<double> u;
    if (axes_.chi) u.push_back(std::log(p.chi));
    if (axes_.delta) u.push_back(p.delta);
    if (axes_.r) u.push_back(p.r);
    if (axes_.gamma) u.push_back(std::log(p.gamma));
    return u;
  }

  SchemeParams decode(const std::vector<double>& u) const {
    SchemeParams p = fixed_;
    std::size_t i = 0;
    if (axes_.chi) p.chi = std::exp(u[i++]);
    if (axes_.delta) p.delta = std::clamp(u[i++], 0.0, 1.0);
    if (axes_.r) p.r = std::clamp(u[i++], 0.0, scheme_.max_r());
    if (axes_.gamma) p.gamma = std::exp(u[i++]);
    if (scheme_.squeezing == SqueezingMode::coherent) {
      p.r = 0.0;
      p.gamma = 0.0;
    }
    if (scheme_.detection == Detection::heterodyne) p.delta = 0.0;
    return p;
  }

  std::vector<double> steps() const {
    std::vector<double> s;
    if (axes_.chi) s.push_back(0.4);
    if (axes_.delta) s.push_back(0.25);
    if (axes_.r) s.push_back(0.15);
    if (axes_.gamma) s.push_back(1.0);
    return s;
  }

 private:
  SchemeConfig scheme_;
  FreeAxes axes_;
  SchemeParams fixed_;
};

/// Variance of a scheme at a parameter point. Points where the squeezing
/// alone would exceed the requested flux, or where the ensemble diverges,
/// evaluate to +inf.
inline Evaluation evaluate_scheme(const SchemeConfig& scheme, double n_over_kappa,
                                  const SchemeParams& params, const RunProtocol& proto,
                                  EstimatorSet estimator = EstimatorSet::linear) {
  Evaluation e;
  e.params = params;
  e.objective = std::numeric_limits<double>::infinity();
  if (!scheme.admits(params.r)) throw ConfigError("parameter point violates the squeezing constraint");
  const double squeeze_flux = 0.5 * params.gamma * std::sinh(params.r) * std::sinh(params.r);
  if (squeeze_flux > n_over_kappa) {
    e.estimate.divergent = true;
    return e;
  }
  const BeamParams beam = BeamParams::from_flux(n_over_kappa, params.gamma, params.r);
  e.estimate = run_ensemble(scheme.detection, beam, {params.chi, params.delta}, proto, estimator);
  if (!e.estimate.divergent) e.objective = e.estimate.variance;
  return e;
}

/// Starting point from the power-law predictions. The coherent-part
/// bandwidth rule chi ~ kappa / sigma^2 sets chi; gamma starts at the
/// geometric mean of the analytic tolerance bounds when they are ordered.
inline SchemeParams initial_guess(const SchemeConfig& scheme, double n_over_kappa) {
  const ScalingPrediction sp = scaling_predictions(n_over_kappa);
  SchemeParams p;
  p.delta = scheme.detection == Detection::adaptive ? 0.5 : 0.0;
  if (scheme.squeezing == SqueezingMode::coherent) {
    p.r = 0.0;
    p.gamma = 0.0;
  } else if (scheme.squeezing == SqueezingMode::limited) {
    p.r = scheme.max_r();
    const GammaBounds b = gamma_bounds(n_over_kappa, 1.0, p.r);
    p.gamma = b.nonempty ? std::sqrt(b.lower * b.upper) : sp.gamma_over_kappa;
  } else {
    p.r = std::log(sp.exp_r);
    p.gamma = sp.gamma_over_kappa;
  }
  BeamParams bp;
  bp.r = p.r;
  const double sigma2 = predicted_variance(scheme, bp) / std::sqrt(n_over_kappa);
  p.chi = scheme.squeezing == SqueezingMode::arbitrary ? sp.chi_over_kappa : 1.0 / sigma2;
  return p;
}

inline constexpr std::size_t kMinBudget = 30;

struct OptimizeOptions {
  std::size_t budget = 40;  ///< total objective evaluations
  std::optional<SchemeParams> start;
  EstimatorSet estimator = EstimatorSet::linear;
  /// Called after every evaluation, e.g. for CSV logging.
  std::function<void(const Evaluation&)> on_evaluation;
};

/// Coordinate scan (each free axis at -step, +step) from the initial guess,
/// then Nelder-Mead with the remaining budget. All evaluations share
/// proto.seed.
inline OptResult minimize_variance(const SchemeConfig& scheme, double n_over_kappa,
                                   const RunProtocol& proto, const OptimizeOptions& opt = {}) {
  if (opt.budget < kMinBudget) {
    throw ConfigError("optimisation budget must be at least " + std::to_string(kMinBudget) + " evaluations");
  }
  if (!(n_over_kappa > 0.0)) throw ConfigError("N/kappa must be positive");
  const FreeAxes axes = FreeAxes::for_scheme(scheme);
  const SchemeParams start = opt.start.value_or(initial_guess(scheme, n_over_kappa));
  const SearchSpace space(scheme, axes, start);

  OptResult out;
  auto objective = [&](const std::vector<double>& u) {
    Evaluation e = evaluate_scheme(scheme, n_over_kappa, space.decode(u), proto, opt.estimator);
    out.log.push_back(e);
    if (opt.on_evaluation) opt.on_evaluation(e);
    return e.objective;
  };

  std::vector<double> u = space.encode(start);
  const std::vector<double> step = space.steps();
  double fu = objective(u);
  for (std::size_t i = 0; i < u.size() && out.log.size() + 2 <= opt.budget; ++i) {
    for (double sign : {-1.0, 1.0}) {
      std::vector<double> trial = u;
      trial[i] += sign * step[i];
      const double ft = objective(trial);
      if (ft < fu) {
        fu = ft;
        u = trial;
        break;
      }
    }
  }

  NelderMeadOptions nm;
  nm.max_evaluations = opt.budget > out.log.size() ? opt.budget - out.log.size() : 0;
  if (nm.max_evaluations > u.size()) {
    std::vector<double> half(step);
    for (double& s : half) s *= 0.5;
    out.converged = nelder_mead(objective, u, half, nm).converged;
  }

  auto best = std::min_element(out.log.begin(), out.log.end(),
                               [](const Evaluation& a, const Evaluation& b) { return a.objective < b.objective; });
  out.best = best->params;
  out.best_estimate = best->estimate;
  return out;
}

// ---------------------------------------------------------------------------
// Gamma tolerance range

struct GammaScanPoint {
  double gamma = 0.0;
  SchemeParams params;  ///< best (chi, delta) at this gamma
  VarianceEstimate estimate;
};

struct GammaRange {
  double gamma_low = 0.0;
  double gamma_high = 0.0;
  bool empty = false;  ///< squeezing never beats the coherent beam
  bool has_lower = true;  ///< false when the scan's smallest gamma is still in range
  bool has_upper = true;
  double min_variance = 0.0;
  double coherent_variance = 0.0;
  std::vector<GammaScanPoint> scan;
};

struct GammaScanOptions {
  double gamma_min = 1.0;
  double gamma_max = 1e6;
  double points_per_decade = 2.0;
  std::size_t inner_budget = 12;  ///< evaluations for (chi, delta) at each gamma
  double tolerance = 0.10;
};

/// Scan gamma on a log grid with r fixed at the scheme's cap (or at
/// `r_fixed` for arbitrary squeezing), optimising the remaining parameters
/// at each point, and return the contiguous range around the minimum whose
/// variance stays within (1 + tolerance) of the minimum.
inline GammaRange gamma_tolerance_range(const SchemeConfig& scheme, double n_over_kappa,
                                        const RunProtocol& proto, const GammaScanOptions& opt = {},
                                        std::optional<double> r_fixed = std::nullopt) {
  if (scheme.squeezing == SqueezingMode::coherent) {
    throw ConfigError("gamma_tolerance_range needs a squeezing scheme");
  }
  if (!(opt.gamma_min > 0.0 && opt.gamma_max > opt.gamma_min && opt.points_per_decade > 0.0)) {
    throw ConfigError("invalid gamma scan bounds");
  }
  const double r = r_fixed.value_or(scheme.squeezing == SqueezingMode::limited
                                        ? scheme.max_r()
                                        : std::log(scaling_predictions(n_over_kappa).exp_r));
  SchemeConfig coherent = scheme;
  coherent.squeezing = SqueezingMode::coherent;
  OptimizeOptions copt;
  copt.budget = std::max(kMinBudget, opt.inner_budget);
  const OptResult coh = minimize_variance(coherent, n_over_kappa, proto, copt);

  GammaRange out;
  out.coherent_variance = coh.best_estimate.variance;
  const double decades = std::log10(opt.gamma_max / opt.gamma_min);
  const std::size_t n_points = static_cast<std::size_t>(std::ceil(decades * opt.points_per_decade)) + 1;
  SchemeParams warm = coh.best;
  for (std::size_t i = 0; i < n_points; ++i) {
    const double g = opt.gamma_min * std::pow(10.0, static_cast<double>(i) / opt.points_per_decade);
    if (g > opt.gamma_max * (1.0 + 1e-12)) break;
    if (0.5 * g * std::sinh(r) * std::sinh(r) >= n_over_kappa) break;
    SchemeParams start = warm;
    start.r = r;
    start.gamma = g;
    const FreeAxes axes{true, scheme.detection == Detection::adaptive, false, false};
    const SearchSpace space(scheme, axes, start);
    std::vector<Evaluation> evals;
    auto f = [&](const std::vector<double>& u) {
      Evaluation e = evaluate_scheme(scheme, n_over_kappa, space.decode(u), proto);
      evals.push_back(e);
      return e.objective;
    };
    std::vector<double> half = space.steps();
    for (double& s : half) s *= 0.5;
    NelderMeadOptions nm;
    nm.max_evaluations = opt.inner_budget;
    nelder_mead(f, space.encode(start), half, nm);
    const auto best = std::min_element(evals.begin(), evals.end(), [](const Evaluation& a, const Evaluation& b) {
      return a.objective < b.objective;
    });
    out.scan.push_back({g, best->params, best->estimate});
    if (std::isfinite(best->objective)) warm = best->params;
  }
  if (out.scan.empty()) {
    out.empty = true;
    return out;
  }
  std::size_t imin = 0;
  for (std::size_t i = 1; i < out.scan.size(); ++i) {
    if (out.scan[i].estimate.variance < out.scan[imin].estimate.variance) imin = i;
  }
  out.min_variance = out.scan[imin].estimate.variance;
  if (!(out.min_variance < out.coherent_variance)) {
    out.empty = true;
    return out;
  }
  const double limit = (1.0 + opt.tolerance) * out.min_variance;
  std::size_t lo = imin, hi = imin;
  while (lo > 0 && out.scan[lo - 1].estimate.variance <= limit) --lo;
  while (hi + 1 < out.scan.size() && out.scan[hi + 1].estimate.variance <= limit) ++hi;
  out.gamma_low = out.scan[lo].gamma;
  out.gamma_high = out.scan[hi].gamma;
  out.has_lower = lo > 0;
  out.has_upper = hi + 1 < out.scan.size();
  return out;
}

// ---------------------------------------------------------------------------
// Scaling fit

struct ScalingFit {
  double exponent = 0.0;
  double intercept = 0.0;  ///< log sigma^2 at N/kappa = 1
  /// Standard error of the exponent propagated from the per-point
  /// jackknife errors.
  double exponent_std_error = 0.0;
  /// Standard error of the exponent from the regression residuals.
  double residual_std_error = 0.0;
  bool poisoned = false;  ///< some point failed to give a finite variance
  std::vector<double> n_over_kappa;
  std::vector<OptResult> points;
};

/// Ordinary least squares of log sigma^2 on log(N/kappa).
inline ScalingFit fit_power_law(const std::vector<double>& n_over_kappa, const std::vector<double>& variance,
                                const std::vector<double>& std_error) {
  const std::size_t m = n_over_kappa.size();
  if (m < 2 || variance.size() != m || std_error.size() != m) {
    throw ConfigError("fit_power_law needs matching lists of at least two points");
  }
  ScalingFit fit;
  fit.n_over_kappa = n_over_kappa;
  std::vector<double> x(m), y(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (!(variance[i] > 0.0) || !std::isfinite(variance[i])) fit.poisoned = true;
    x[i] = std::log(n_over_kappa[i]);
    y[i] = std::log(variance[i]);
  }
  if (fit.poisoned) return fit;
  const double xm = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(m);
  const double ym = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  fit.exponent = sxy / sxx;
  fit.intercept = ym - fit.exponent * xm;
  double prop = 0.0, rss = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double w = (x[i] - xm) / sxx;
    const double rel = std_error[i] / variance[i];
    prop += w * w * rel * rel;
    const double res = y[i] - fit.intercept - fit.exponent * x[i];
    rss += res * res;
  }
  fit.exponent_std_error = std::sqrt(prop);
  fit.residual_std_error = m > 2 ? std::sqrt(rss / static_cast<double>(m - 2) / sxx) : 0.0;
  return fit;
}

/// Optimise the scheme at each N/kappa and fit the power law.
inline ScalingFit fit_scaling(const SchemeConfig& scheme, const std::vector<double>& n_over_kappa,
                              const RunProtocol& proto, const OptimizeOptions& opt = {}) {
  if (n_over_kappa.size() < 4) throw ConfigError("fit_scaling needs at least four points");
  std::vector<OptResult> points;
  std::vector<double> v, se;
  for (double n : n_over_kappa) {
    points.push_back(minimize_variance(scheme, n, proto, opt));
    v.push_back(points.back().best_estimate.variance);
    se.push_back(points.back().best_estimate.std_error);
  }
  ScalingFit fit = fit_power_law(n_over_kappa, v, se);
  fit.points = std::move(points);
  return fit;
}

}  // namespace phasetrack
