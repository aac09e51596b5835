#pragma once

// Batch commands behind the command-line tool. Each command reads a
// RunConfig, fills in the defaults it used (so the metadata block is the
// complete resolved configuration) and writes one CSV document.

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "phasetrack/beam.hpp"
#include "phasetrack/config.hpp"
#include "phasetrack/csv.hpp"
#include "phasetrack/ensemble.hpp"
#include "phasetrack/error.hpp"
#include "phasetrack/optimize.hpp"
#include "phasetrack/theory.hpp"

namespace phasetrack {

struct CommandContext {
  std::string build_id = "unknown";
  std::ostream* log = nullptr;  ///< progress messages, may be null

  void note(const std::string& msg) const {
    if (log) *log << msg << '\n' << std::flush;
  }
};

namespace detail {

inline double resolve_double(RunConfig& cfg, std::string_view key, double fallback) {
  const double v = cfg.get_double(key, fallback);
  cfg.set(std::string(key), fmt_num(v));
  return v;
}

inline std::uint64_t resolve_u64(RunConfig& cfg, std::string_view key, std::uint64_t fallback) {
  const std::uint64_t v = cfg.get_u64(key, fallback);
  cfg.set(std::string(key), std::to_string(v));
  return v;
}

inline std::vector<double> resolve_list(RunConfig& cfg, std::string_view key, std::vector<double> fallback) {
  const std::vector<double> v = cfg.get_list(key, std::move(fallback));
  std::string text;
  for (std::size_t i = 0; i < v.size(); ++i) text += (i ? "," : "") + fmt_num(v[i]);
  cfg.set(std::string(key), text);
  return v;
}

inline SchemeConfig resolve_scheme(RunConfig& cfg, std::string_view fallback = {}) {
  const std::string name = fallback.empty() ? cfg.require("scheme") : cfg.get_string("scheme", std::string(fallback));
  SchemeConfig s = SchemeConfig::parse(name);
  s.squeezing_cap = resolve_double(cfg, "squeezing_cap", s.squeezing_cap);
  if (!(s.squeezing_cap >= 1.0)) throw ConfigError("squeezing_cap must be >= 1");
  cfg.set("scheme", s.name());
  return s;
}

inline RunProtocol resolve_protocol(RunConfig& cfg, double default_duration = 130.0) {
  RunProtocol p;
  p.duration_chi = resolve_double(cfg, "duration_chi", default_duration);
  p.burn_in_chi = resolve_double(cfg, "burn_in_chi", p.burn_in_chi);
  p.stride_chi = resolve_double(cfg, "stride_chi", p.stride_chi);
  p.n_trajectories = resolve_u64(cfg, "n_traj", p.n_trajectories);
  p.seed = resolve_u64(cfg, "seed", p.seed);
  p.dt_eta = resolve_double(cfg, "dt_eta", p.dt_eta);
  p.noise_substeps = static_cast<int>(resolve_u64(cfg, "noise_substeps", 1));
  p.bayes_grid = resolve_u64(cfg, "bayes_grid", p.bayes_grid);
  p.phase_offset = resolve_double(cfg, "phase_offset", 0.0);
  const std::string holevo = cfg.get_string("holevo", "real-part");
  if (holevo == "real-part") p.definition = HolevoDefinition::real_part;
  else if (holevo == "modulus") p.definition = HolevoDefinition::modulus;
  else throw ConfigError("holevo must be real-part or modulus, got " + holevo);
  cfg.set("holevo", holevo);
  // Results do not depend on the thread count, so its default is not echoed.
  p.threads = static_cast<unsigned>(cfg.get_u64("threads", 0));
  p.validate();
  return p;
}

inline EstimatorSet resolve_estimator(RunConfig& cfg) {
  const std::string e = cfg.get_string("estimator", "linear");
  cfg.set("estimator", e);
  if (e == "linear") return EstimatorSet::linear;
  if (e == "bayes") return EstimatorSet::bayes;
  throw ConfigError("estimator must be linear or bayes, got " + e);
}

inline std::vector<std::string> variance_fields(const SchemeConfig& s, double n, const SchemeParams& p,
                                                EstimatorSet est, const VarianceEstimate& v,
                                                const RunProtocol& proto) {
  return {s.name(),
          std::string(to_string(s.detection)),
          fmt_num(n),
          fmt_num(p.gamma),
          fmt_num(p.r),
          fmt_num(p.chi),
          s.detection == Detection::adaptive ? fmt_num(p.delta) : std::string(),
          est == EstimatorSet::bayes ? "bayes" : "linear",
          v.divergent ? "inf" : fmt_num(v.variance),
          v.divergent ? "inf" : fmt_num(v.std_error),
          fmt_num(static_cast<std::uint64_t>(proto.n_trajectories)),
          fmt_num(proto.dt_eta),
          fmt_num(proto.seed)};
}

inline OptimizeOptions resolve_optimize(RunConfig& cfg) {
  OptimizeOptions o;
  o.budget = resolve_u64(cfg, "budget", 40);
  if (o.budget < kMinBudget) throw ConfigError("budget must be at least " + std::to_string(kMinBudget));
  return o;
}

}  // namespace detail

/// One ensemble at fixed parameters.
inline void cmd_simulate(RunConfig cfg, std::ostream& os, const CommandContext& ctx = {}) {
  cfg.set("command", "simulate");
  const SchemeConfig scheme = detail::resolve_scheme(cfg);
  const double n = cfg.require_double("n_over_kappa");
  SchemeParams p;
  p.chi = cfg.require_double("chi_over_kappa");
  if (scheme.detection == Detection::adaptive) {
    p.delta = cfg.require_double("delta");
  } else {
    p.delta = 0.0;
  }
  if (scheme.squeezing == SqueezingMode::coherent) {
    p.gamma = detail::resolve_double(cfg, "gamma_over_kappa", 0.0);
    p.r = detail::resolve_double(cfg, "r", 0.0);
    if (p.r != 0.0) throw ConfigError("coherent schemes need r = 0");
  } else {
    p.gamma = cfg.require_double("gamma_over_kappa");
    p.r = cfg.require_double("r");
    if (!scheme.admits(p.r)) throw ConfigError("r exceeds the squeezing cap of the scheme");
  }
  const RunProtocol proto = detail::resolve_protocol(cfg);
  const EstimatorSet est = detail::resolve_estimator(cfg);
  ctx.note("simulate " + scheme.name() + " N/kappa=" + fmt_num(n));
  const BeamParams beam = BeamParams::from_flux(n, p.gamma, p.r);
  const VarianceEstimate v = run_ensemble(scheme.detection, beam, {p.chi, p.delta}, proto, est);
  write_metadata(os, ctx.build_id, cfg);
  os << kVarianceColumns << '\n';
  write_row(os, detail::variance_fields(scheme, n, p, est, v, proto));
}

/// Every evaluation of one optimisation, with the best row flagged.
inline void cmd_optimize(RunConfig cfg, std::ostream& os, const CommandContext& ctx = {}) {
  cfg.set("command", "optimize");
  const SchemeConfig scheme = detail::resolve_scheme(cfg);
  const double n = cfg.require_double("n_over_kappa");
  const RunProtocol proto = detail::resolve_protocol(cfg);
  OptimizeOptions opt = detail::resolve_optimize(cfg);
  ctx.note("optimize " + scheme.name() + " N/kappa=" + fmt_num(n));
  const OptResult res = minimize_variance(scheme, n, proto, opt);
  write_metadata(os, ctx.build_id, cfg);
  os << kVarianceColumns << ",optimum\n";
  bool flagged = false;
  for (const auto& e : res.log) {
    auto fields = detail::variance_fields(scheme, n, e.params, EstimatorSet::linear, e.estimate, proto);
    const bool best = !flagged && e.params.chi == res.best.chi && e.params.delta == res.best.delta &&
                      e.params.r == res.best.r && e.params.gamma == res.best.gamma;
    flagged = flagged || best;
    fields.push_back(best ? "1" : "0");
    write_row(os, fields);
  }
}

/// Optimised sigma^2 for all six schemes at each N/kappa, with the scaled
/// value sigma^2 sqrt(N/kappa) next to its predicted asymptote.
inline void cmd_table1(RunConfig cfg, std::ostream& os, const CommandContext& ctx = {}) {
  cfg.set("command", "table1");
  const std::vector<double> ns = detail::resolve_list(cfg, "n_list", {1e2, 1e3, 1e4});
  const double cap = detail::resolve_double(cfg, "squeezing_cap", 2.0);
  const RunProtocol proto = detail::resolve_protocol(cfg);
  OptimizeOptions opt = detail::resolve_optimize(cfg);
  write_metadata(os, ctx.build_id, cfg);
  os << kVarianceColumns << ",optimum,scaled_variance,predicted_scaled,status\n";
  for (double n : ns) {
    for (const SchemeConfig& scheme : all_schemes(cap)) {
      ctx.note("table1 " + scheme.name() + " N/kappa=" + fmt_num(n));
      std::vector<std::string> fields;
      std::string status = "ok";
      try {
        const OptResult res = minimize_variance(scheme, n, proto, opt);
        fields = detail::variance_fields(scheme, n, res.best, EstimatorSet::linear, res.best_estimate, proto);
        fields.push_back("1");
        fields.push_back(fmt_num(res.best_estimate.variance * std::sqrt(n)));
        if (!res.converged) status = "budget-exhausted";
      } catch (const NumericalError& e) {
        fields = {scheme.name(), std::string(to_string(scheme.detection)), fmt_num(n), "", "", "", "", "linear",
                  "", "", fmt_num(static_cast<std::uint64_t>(proto.n_trajectories)), fmt_num(proto.dt_eta),
                  fmt_num(proto.seed), "0", ""};
        status = "failed:" + e.module();
      }
      fields.push_back(fmt_num(asymptotic_constant(scheme)));
      fields.push_back(status);
      write_row(os, fields);
    }
  }
}

/// Optimised variance over a list of N/kappa and the fitted exponent.
inline void cmd_scaling(RunConfig cfg, std::ostream& os, const CommandContext& ctx = {}) {
  cfg.set("command", "scaling");
  const SchemeConfig scheme = detail::resolve_scheme(cfg);
  const std::vector<double> ns = detail::resolve_list(cfg, "n_list", {1e2, 1e3, 1e4, 1e5});
  if (ns.size() < 4) throw ConfigError("n_list needs at least four values for a fit");
  const RunProtocol proto = detail::resolve_protocol(cfg);
  const OptimizeOptions opt = detail::resolve_optimize(cfg);
  ctx.note("scaling " + scheme.name());
  const ScalingFit fit = fit_scaling(scheme, ns, proto, opt);
  write_metadata(os, ctx.build_id, cfg);
  os << "kind,scheme,n_over_kappa,gamma_over_kappa,r,chi_over_kappa,delta,variance,std_error,exponent,"
        "exponent_std_error,residual_std_error,intercept,n_traj,dt_eta,seed\n";
  const std::string tail =
      fmt_num(static_cast<std::uint64_t>(proto.n_trajectories)) + "," + fmt_num(proto.dt_eta) + "," + fmt_num(proto.seed);
  for (std::size_t i = 0; i < ns.size(); ++i) {
    const OptResult& pt = fit.points[i];
    write_row(os, {"point", scheme.name(), fmt_num(ns[i]), fmt_num(pt.best.gamma), fmt_num(pt.best.r),
                   fmt_num(pt.best.chi), scheme.detection == Detection::adaptive ? fmt_num(pt.best.delta) : "",
                   fmt_num(pt.best_estimate.variance), fmt_num(pt.best_estimate.std_error), "", "", "", "", tail});
  }
  write_row(os, {"fit", scheme.name(), "", "", "", "", "", "", "", fit.poisoned ? "nan" : fmt_num(fit.exponent),
                 fmt_num(fit.exponent_std_error), fmt_num(fit.residual_std_error), fmt_num(fit.intercept), tail});
}

/// Contiguous gamma range within 10% of the minimum variance, next to the
/// analytic bounds.
inline void cmd_gamma_range(RunConfig cfg, std::ostream& os, const CommandContext& ctx = {}) {
  cfg.set("command", "gamma-range");
  const SchemeConfig scheme = detail::resolve_scheme(cfg, "adaptive-limited");
  const std::vector<double> ns = detail::resolve_list(cfg, "n_list", {1e2, 1e3, 1e4});
  const RunProtocol proto = detail::resolve_protocol(cfg);
  GammaScanOptions g;
  g.gamma_min = detail::resolve_double(cfg, "gamma_min", 1.0);
  g.gamma_max = detail::resolve_double(cfg, "gamma_max", 1e6);
  g.points_per_decade = detail::resolve_double(cfg, "points_per_decade", 2.0);
  g.inner_budget = detail::resolve_u64(cfg, "inner_budget", 12);
  g.tolerance = detail::resolve_double(cfg, "tolerance", 0.10);
  write_metadata(os, ctx.build_id, cfg);
  os << "n_over_kappa,gamma_low,gamma_high,bound_low,bound_high,scaling_bound_low,scaling_bound_high,"
        "has_lower,has_upper,empty,min_variance,coherent_variance,r\n";
  for (double n : ns) {
    ctx.note("gamma-range " + scheme.name() + " N/kappa=" + fmt_num(n));
    const double r = scheme.squeezing == SqueezingMode::limited ? scheme.max_r()
                                                                 : std::log(scaling_predictions(n).exp_r);
    const GammaRange range = gamma_tolerance_range(scheme, n, proto, g, r);
    const GammaBounds b = gamma_bounds(n, 1.0, r);
    write_row(os, {fmt_num(n), range.empty ? "" : fmt_num(range.gamma_low), range.empty ? "" : fmt_num(range.gamma_high),
                   fmt_num(b.lower), fmt_num(b.upper), fmt_num(b.scaling_lower), fmt_num(b.scaling_upper),
                   range.has_lower ? "1" : "0", range.has_upper ? "1" : "0", range.empty ? "1" : "0",
                   fmt_num(range.min_variance), fmt_num(range.coherent_variance), fmt_num(r)});
  }
}

/// Predicted linear/Bayes variance ratio when the Bayes filter also uses
/// the noise information: variances scale as the inverse square root of
/// the information rate, and the rate grows from E^2 e^{2r} (mean field at
/// lock) by gamma times the maximum of g.
inline double predicted_bayes_ratio(const BeamParams& p) {
  if (p.r == 0.0 || p.gamma == 0.0) return 1.0;
  double gmax = 0.0;
  for (int i = 0; i <= 720; ++i) {
    gmax = std::max(gmax, noise_info_g(p.r, -kPi / 2.0 + kPi * i / 720.0));
  }
  const double base = p.amplitude * p.amplitude * std::exp(2.0 * p.r);
  return std::sqrt(1.0 + p.gamma * gmax / base);
}

/// Linear and Bayes estimates on the same records at the optimised
/// parameters of each N/kappa. Records run for 1000/chi by default.
inline void cmd_compare(RunConfig cfg, std::ostream& os, const CommandContext& ctx = {}) {
  cfg.set("command", "compare");
  const SchemeConfig scheme = detail::resolve_scheme(cfg, "adaptive-arbitrary");
  if (scheme.detection != Detection::adaptive) throw ConfigError("compare needs an adaptive scheme");
  const std::vector<double> ns = detail::resolve_list(cfg, "n_list", {1e2});
  const RunProtocol proto = detail::resolve_protocol(cfg, 1000.0);
  RunProtocol opt_proto = proto;
  opt_proto.duration_chi = 130.0;
  OptimizeOptions opt = detail::resolve_optimize(cfg);
  write_metadata(os, ctx.build_id, cfg);
  os << "n_over_kappa,scheme,gamma_over_kappa,r,chi_over_kappa,delta,variance_linear,variance_bayes,ratio,"
        "ratio_std_error,msd_fraction,msd_std_error,predicted_ratio,n_traj,dt_eta,seed\n";
  for (double n : ns) {
    ctx.note("compare " + scheme.name() + " N/kappa=" + fmt_num(n));
    const OptResult best = minimize_variance(scheme, n, opt_proto, opt);
    const SchemeParams& p = best.best;
    const BeamParams beam = BeamParams::from_flux(n, p.gamma, p.r);
    const EstimatorComparison c = compare_estimators(scheme.detection, beam, {p.chi, p.delta}, proto);
    write_row(os, {fmt_num(n), scheme.name(), fmt_num(p.gamma), fmt_num(p.r), fmt_num(p.chi), fmt_num(p.delta),
                   fmt_num(c.linear.variance), fmt_num(c.bayes.variance), fmt_num(c.ratio), fmt_num(c.ratio_std_error),
                   fmt_num(c.msd_fraction), fmt_num(c.msd_std_error), fmt_num(predicted_bayes_ratio(beam)),
                   fmt_num(static_cast<std::uint64_t>(proto.n_trajectories)), fmt_num(proto.dt_eta),
                   fmt_num(proto.seed)});
  }
}

/// Maximum over the quadrature angle of the noise information g(r, .) on a
/// grid of r, next to its e^{3r} scaling and the heterodyne h(r).
inline void cmd_g_bound(RunConfig cfg, std::ostream& os, const CommandContext& ctx = {}) {
  cfg.set("command", "g-bound");
  const double r_max = detail::resolve_double(cfg, "r_max", 3.0);
  const auto points = detail::resolve_u64(cfg, "r_points", 61);
  if (!(r_max > 0.0) || points < 2) throw ConfigError("g-bound needs r_max > 0 and r_points >= 2");
  ctx.note("g-bound r in [0, " + fmt_num(r_max) + "]");
  write_metadata(os, ctx.build_id, cfg);
  os << "r,max_g,max_g_over_e3r,argmax_phi_minus_theta,h\n";
  constexpr int kAngles = 4096;
  for (std::uint64_t i = 0; i < points; ++i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(points - 1);
    double best = 0.0, at = 0.0;
    for (int j = 0; j < kAngles; ++j) {
      const double ang = -kPi + kTwoPi * (j + 0.5) / kAngles;
      const double g = noise_info_g(r, ang);
      if (g > best) {
        best = g;
        at = ang;
      }
    }
    write_row(os, {fmt_num(r), fmt_num(best), fmt_num(best / std::exp(3.0 * r)), fmt_num(at), fmt_num(noise_info_h(r))});
  }
}

using CommandFn = void (*)(RunConfig, std::ostream&, const CommandContext&);

/// Exit status convention shared by the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2 };

/// Run a command, mapping library errors to exit codes and messages.
inline int run_command(CommandFn fn, const RunConfig& cfg, std::ostream& os, std::ostream& err,
                       const CommandContext& ctx = {}) {
  try {
    fn(cfg, os, ctx);
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical error in module " << e.module() << ": " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace phasetrack
