#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

using crboot::cli::CliConfig;

void add_common(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--output,-o", cfg.output, "Output path (default: stdout)");
  sub->add_flag("--csv", cfg.csv, "Write CSV instead of JSON");
  sub->add_option("--threads", cfg.threads, "Worker cap (0 = all cores); results do not depend on it");
}

void add_data(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--input,-i", cfg.input, "CSV with columns time,cause (cause 0 = censored)")->required();
  sub->add_option("--k", cfg.k, "Number of competing risks");
  sub->add_option("--horizon", cfg.horizon, "Events after this time are ignored");
}

void add_band(CLI::App* sub, CliConfig& cfg) {
  sub->add_option("--interval", cfg.interval, "Band interval t1 t2")->expected(2);
  sub->add_option("--level", cfg.level, "Confidence level");
  sub->add_option("--multiplier", cfg.multiplier, "normal | poisson | weird");
  sub->add_option("--band", cfg.band, "ep | hw");
  sub->add_flag("--adjusted,!--no-adjusted", cfg.adjusted, "Discontinuity-adjusted resampling (default on)");
  sub->add_option("--reps", cfg.reps, "Bootstrap replicates B");
  sub->add_option("--seed", cfg.seed, "Root seed");
}

std::string joined(int argc, char** argv) {
  std::string s;
  for (int i = 1; i < argc; ++i) {
    if (i > 1) s += ' ';
    s += argv[i];
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CliConfig cfg;
  CLI::App app{"Competing-risks estimation and wild bootstrap confidence bands for tied event times"};
  app.set_version_flag("--version", crboot::kVersion);
  app.require_subcommand(1, 1);

  auto* est = app.add_subcommand("estimate", "Nelson-Aalen, Greenwood, Kaplan-Meier and Aalen-Johansen curves");
  add_data(est, cfg);
  add_common(est, cfg);

  auto* bands = app.add_subcommand("bands", "Simultaneous confidence band for one cumulative incidence function");
  add_data(bands, cfg);
  add_common(bands, cfg);
  add_band(bands, cfg);
  bands->add_option("--cause", cfg.cause, "Cause of interest");
  bands->add_option("--plot-csv", cfg.plot_csv, "Also write time,lower,estimate,upper CSV here");
  bands->add_option("--window", cfg.window, "in-effect | inward");
  bands->add_option("--convention", cfg.convention, "at-jump | before-jump");

  auto* sim = app.add_subcommand("simulate", "Monte Carlo coverage of the band under the tied-data model");
  add_common(sim, cfg);
  add_band(sim, cfg);
  sim->add_option("--scenario", cfg.scenario_file, "key=value scenario file; flags override it");
  sim->add_option("--p", cfg.p, "Probability of discretized times");
  sim->add_option("--lattice", cfg.lattice, "Lattice resolution k");
  sim->add_option("--n", cfg.n, "Sample size");
  sim->add_option("--mc-reps", cfg.mc_reps, "Monte Carlo replicates");
  sim->add_option("--table", cfg.table, "Also write the coverage table row as CSV here");
  sim->add_flag("--compare", cfg.compare, "Run unadjusted and adjusted schemes side by side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return crboot::cli::kExitUsage;
  }

  if (est->parsed()) cfg.subcommand = crboot::cli::Subcommand::Estimate;
  if (bands->parsed()) cfg.subcommand = crboot::cli::Subcommand::Bands;
  if (sim->parsed()) {
    cfg.subcommand = crboot::cli::Subcommand::Simulate;
    cfg.adjusted_set = sim->count("--adjusted") + sim->count("--no-adjusted") > 0;
    cfg.multiplier_set = sim->count("--multiplier") > 0;
    cfg.band_set = sim->count("--band") > 0;
    cfg.interval_set = sim->count("--interval") > 0;
    cfg.level_set = sim->count("--level") > 0;
    cfg.reps_set = sim->count("--reps") > 0;
    cfg.mc_reps_set = sim->count("--mc-reps") > 0;
    cfg.seed_set = sim->count("--seed") > 0;
  }

  std::cerr << "crboot " << crboot::kVersion << " seed=" << cfg.seed << " args: " << joined(argc, argv) << '\n';
  return crboot::cli::run_guarded(cfg, std::cerr);
}
