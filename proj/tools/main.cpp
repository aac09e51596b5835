// Command-line front end: parses flags, merges them over the config file and
// dispatches to the batch commands.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "phasetrack/commands.hpp"

#ifndef PHASETRACK_BUILD_ID
#define PHASETRACK_BUILD_ID "unknown"
#endif

namespace {

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;
  std::optional<double> dt_eta;
  std::optional<std::uint64_t> n_traj;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config_path, "key=value config file (or a previous output)");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--out", f.out, "output CSV path (default: stdout)");
  sub->add_option("--threads", f.threads, "worker threads (default: all cores)");
  sub->add_option("--dt-eta", f.dt_eta, "time step as a fraction of the fastest time scale");
  sub->add_option("--n-traj", f.n_traj, "number of trajectories");
  sub->add_option("--set", f.sets, "extra key=value entries, applied last");
}

phasetrack::RunConfig build_config(const CommonFlags& f) {
  phasetrack::RunConfig cfg = f.config_path.empty() ? phasetrack::RunConfig{}
                                                    : phasetrack::RunConfig::load(f.config_path);
  cfg.set("build", PHASETRACK_BUILD_ID);
  if (f.seed) cfg.set("seed", std::to_string(*f.seed));
  if (f.threads) cfg.set("threads", std::to_string(*f.threads));
  if (f.dt_eta) cfg.set("dt_eta", phasetrack::fmt_num(*f.dt_eta));
  if (f.n_traj) cfg.set("n_traj", std::to_string(*f.n_traj));
  if (!f.out.empty()) cfg.set("out", f.out);
  for (const auto& kv : f.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw phasetrack::ConfigError("--set expects key=value, got " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous phase estimation on narrowband squeezed beams"};
  app.require_subcommand(1);
  CommonFlags flags;
  struct Entry {
    const char* name;
    const char* help;
    phasetrack::CommandFn fn;
  };
  const Entry entries[] = {
      {"simulate", "run one ensemble at fixed parameters", phasetrack::cmd_simulate},
      {"optimize", "minimise the variance of one scheme, logging every evaluation", phasetrack::cmd_optimize},
      {"table1", "optimised scaled variances for all six schemes", phasetrack::cmd_table1},
      {"scaling", "fit the variance exponent over N/kappa", phasetrack::cmd_scaling},
      {"gamma-range", "gamma range within 10% of the minimum variance", phasetrack::cmd_gamma_range},
      {"compare", "Bayes versus linear estimates on shared records", phasetrack::cmd_compare},
      {"g-bound", "maximum noise information g against r", phasetrack::cmd_g_bound},
  };
  for (const auto& e : entries) add_common(app.add_subcommand(e.name, e.help), flags);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return phasetrack::kExitConfig;
  }

  phasetrack::CommandFn fn = nullptr;
  for (const auto& e : entries) {
    if (app.got_subcommand(e.name)) fn = e.fn;
  }

  phasetrack::RunConfig cfg;
  try {
    cfg = build_config(flags);
  } catch (const phasetrack::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return phasetrack::kExitConfig;
  }

  phasetrack::CommandContext ctx;
  ctx.build_id = PHASETRACK_BUILD_ID;
  ctx.log = &std::cerr;
  const std::string out_path = cfg.get_string("out", "");
  if (out_path.empty()) return phasetrack::run_command(fn, cfg, std::cout, std::cerr, ctx);

  // Write to a temporary file first so a failed run leaves no partial output.
  const std::string tmp = out_path + ".partial";
  int code = 0;
  {
    std::ofstream os(tmp);
    if (!os) {
      std::cerr << "config error: cannot write " << out_path << '\n';
      return phasetrack::kExitConfig;
    }
    code = phasetrack::run_command(fn, cfg, os, std::cerr, ctx);
  }
  if (code == 0) {
    std::rename(tmp.c_str(), out_path.c_str());
  } else {
    std::remove(tmp.c_str());
  }
  return code;
}
