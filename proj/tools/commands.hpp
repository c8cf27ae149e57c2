#pragma once

#include <cstdint>
#include <iostream>
#include <limits>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crboot/crboot.hpp"

namespace crboot::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Bad flags or inconsistent options, reported with exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Subcommand { Estimate, Bands, Simulate };

struct CliConfig {
  Subcommand subcommand = Subcommand::Estimate;
  std::string input;
  int k = 2;
  int cause = 1;
  std::optional<double> horizon;
  std::vector<double> interval;
  double level = 0.95;
  std::string multiplier = "poisson";
  std::string band = "ep";
  std::string window = "in-effect";
  std::string convention = "at-jump";
  bool adjusted = true;
  long long reps = 999;
  long long mc_reps = 2000;
  std::uint64_t seed = 20240601;
  unsigned threads = 0;
  std::string output;
  std::string plot_csv;
  std::string table;
  std::string scenario_file;
  bool csv = false;
  bool compare = false;

  // simulate-only scenario fields, applied over the scenario file when set
  std::optional<double> p;
  std::optional<int> lattice;
  std::optional<long long> n;
  bool adjusted_set = false;
  bool multiplier_set = false;
  bool band_set = false;
  bool interval_set = false;
  bool level_set = false;
  bool reps_set = false;
  bool mc_reps_set = false;
  bool seed_set = false;
};

namespace detail {

using json = nlohmann::ordered_json;

inline void emit(const CliConfig& cfg, const std::string& text) {
  if (cfg.output.empty() || cfg.output == "-") {
    std::cout << text;
    std::cout.flush();
  } else {
    io::write_file(cfg.output, text);
  }
}

inline JumpConvention parse_convention(const std::string& s) {
  if (s == "at-jump") return JumpConvention::AtJump;
  if (s == "before-jump") return JumpConvention::BeforeJump;
  throw UsageError("--convention must be at-jump or before-jump, got '" + s + "'");
}

inline WindowRule parse_window(const std::string& s) {
  if (s == "in-effect") return WindowRule::InEffect;
  if (s == "inward") return WindowRule::Inward;
  throw UsageError("--window must be in-effect or inward, got '" + s + "'");
}

inline MultiplierLaw law_flag(const std::string& s) {
  try {
    return parse_multiplier_law(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--multiplier: ") + e.what());
  }
}

inline BandType band_flag(const std::string& s) {
  try {
    return parse_band_type(s);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("--band: ") + e.what());
  }
}

inline Cohort load_cohort(const CliConfig& cfg) {
  if (cfg.input.empty()) throw UsageError("--input is required");
  if (cfg.k < 1) throw UsageError("--k must be at least 1");
  const std::string text = io::read_file(cfg.input);
  return parse_cohort(text, cfg.k, cfg.horizon.value_or(std::numeric_limits<double>::infinity()));
}

inline void check_cause_flag(const CliConfig& cfg) {
  if (cfg.cause < 1 || cfg.cause > cfg.k)
    throw UsageError("--cause must lie in 1.." + std::to_string(cfg.k) + ", got " + std::to_string(cfg.cause));
}

}  // namespace detail

/// Estimator curves on the event grid. JSON by default, one wide CSV table
/// with --csv.
inline int cmd_estimate(const CliConfig& cfg, std::ostream& log) {
  using detail::json;
  const Cohort cohort = detail::load_cohort(cfg);
  const RiskTable rt = build_risk_table(cohort);
  const int k = rt.k();
  std::vector<std::string> warnings;
  if (rt.empty()) {
    warnings.push_back("no uncensored events: hazards stay 0, survival stays 1");
    log << "warning: " << warnings.back() << '\n';
  }

  std::vector<StepCurve> hazard, variance, unadjusted, cif, cif_var;
  std::vector<std::pair<int, int>> pairs;
  std::vector<StepCurve> cov;
  for (int j = 1; j <= k; ++j) {
    hazard.push_back(nelson_aalen(rt, j));
    variance.push_back(greenwood_variance(rt, j));
    unadjusted.push_back(unadjusted_variance(rt, j));
    cif.push_back(aalen_johansen(rt, j));
    cif_var.push_back(cif_covariance(rt, j).diagonal());
    for (int l = j + 1; l <= k; ++l) {
      pairs.emplace_back(j, l);
      cov.push_back(greenwood_covariance(rt, j, l));
    }
  }
  const StepCurve surv = kaplan_meier(rt);

  if (cfg.csv) {
    std::vector<std::string> names;
    std::vector<const StepCurve*> curves;
    auto add = [&](const std::string& name, const StepCurve& c) {
      names.push_back(name);
      curves.push_back(&c);
    };
    for (int j = 1; j <= k; ++j) add("hazard" + std::to_string(j), hazard[j - 1]);
    for (int j = 1; j <= k; ++j) add("variance" + std::to_string(j), variance[j - 1]);
    for (int j = 1; j <= k; ++j) add("unadjustedVariance" + std::to_string(j), unadjusted[j - 1]);
    for (std::size_t p = 0; p < pairs.size(); ++p)
      add("covariance" + std::to_string(pairs[p].first) + "_" + std::to_string(pairs[p].second), cov[p]);
    add("survival", surv);
    for (int j = 1; j <= k; ++j) add("cif" + std::to_string(j), cif[j - 1]);
    for (int j = 1; j <= k; ++j) add("cifVariance" + std::to_string(j), cif_var[j - 1]);
    detail::emit(cfg, io::table_csv(rt.times(), names, curves));
    return kExitOk;
  }

  json causes = json::array();
  for (int j = 1; j <= k; ++j) {
    causes.push_back(json{{"cause", j},
                          {"cumulativeHazard", hazard[j - 1].values()},
                          {"variance", variance[j - 1].values()},
                          {"unadjustedVariance", unadjusted[j - 1].values()},
                          {"cif", cif[j - 1].values()},
                          {"cifVariance", cif_var[j - 1].values()}});
  }
  json covs = json::array();
  for (std::size_t p = 0; p < pairs.size(); ++p)
    covs.push_back(json{{"causes", {pairs[p].first, pairs[p].second}}, {"values", cov[p].values()}});
  const json out{{"n", rt.n()},          {"k", k},
                 {"censored", rt.num_censored()},
                 {"times", rt.times()},  {"atRisk", rt.at_risk()},
                 {"survival", surv.values()},
                 {"causes", causes},     {"covariances", covs},
                 {"warnings", warnings}};
  detail::emit(cfg, out.dump(2) + "\n");
  return kExitOk;
}

inline BandSpec band_spec_from(const CliConfig& cfg) {
  if (cfg.interval.size() != 2) throw UsageError("--interval needs two numbers t1 t2");
  if (cfg.reps < 1) throw UsageError("--reps must be at least 1, got " + std::to_string(cfg.reps));
  BandSpec spec;
  spec.t1 = cfg.interval[0];
  spec.t2 = cfg.interval[1];
  spec.level = cfg.level;
  spec.type = detail::band_flag(cfg.band);
  spec.law = detail::law_flag(cfg.multiplier);
  spec.adjusted = cfg.adjusted;
  spec.replicates = static_cast<std::size_t>(cfg.reps);
  spec.threads = cfg.threads;
  spec.window = detail::parse_window(cfg.window);
  spec.convention = detail::parse_convention(cfg.convention);
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return spec;
}

/// Simultaneous band for one cause: BandResult JSON (or plot-data CSV with
/// --csv), optionally the plot-data CSV to --plot-csv as well.
inline int cmd_bands(const CliConfig& cfg, std::ostream& log) {
  detail::check_cause_flag(cfg);
  const BandSpec spec = band_spec_from(cfg);
  const Cohort cohort = detail::load_cohort(cfg);
  const RiskTable rt = build_risk_table(cohort);
  const BandResult band = build_band(rt, cfg.cause, spec, cfg.seed);
  for (const auto& w : band.warnings) log << "warning: " << w << '\n';
  log << "q=" << io::format_double(band.q) << " seed=" << cfg.seed << '\n';
  if (!cfg.plot_csv.empty()) io::write_file(cfg.plot_csv, io::band_csv(band));
  detail::emit(cfg, cfg.csv ? io::band_csv(band) : io::band_json(band).dump(2) + "\n");
  return kExitOk;
}

/// Scenario from the optional file with explicitly given flags on top.
inline Scenario scenario_from(const CliConfig& cfg) {
  Scenario sc;
  if (!cfg.scenario_file.empty()) sc = parse_scenario(io::read_file(cfg.scenario_file));
  if (cfg.p) sc.p = *cfg.p;
  if (cfg.lattice) sc.lattice = *cfg.lattice;
  if (cfg.n) {
    if (*cfg.n < 1) throw UsageError("--n must be at least 1");
    sc.n = static_cast<std::size_t>(*cfg.n);
  }
  if (cfg.multiplier_set) sc.law = detail::law_flag(cfg.multiplier);
  if (cfg.band_set) sc.band = detail::band_flag(cfg.band);
  if (cfg.adjusted_set) sc.adjusted = cfg.adjusted;
  if (cfg.interval_set) {
    if (cfg.interval.size() != 2) throw UsageError("--interval needs two numbers t1 t2");
    sc.t1 = cfg.interval[0];
    sc.t2 = cfg.interval[1];
  }
  if (cfg.level_set) sc.level = cfg.level;
  if (cfg.reps_set) {
    if (cfg.reps < 1) throw UsageError("--reps must be at least 1, got " + std::to_string(cfg.reps));
    sc.replicates = static_cast<std::size_t>(cfg.reps);
  }
  if (cfg.mc_reps_set) {
    if (cfg.mc_reps < 1) throw UsageError("--mc-reps must be at least 1, got " + std::to_string(cfg.mc_reps));
    sc.mc_reps = static_cast<std::size_t>(cfg.mc_reps);
  }
  if (cfg.seed_set) sc.seed = cfg.seed;
  sc.threads = cfg.threads;
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return sc;
}

/// Monte Carlo coverage. With --compare both schemes run on the same
/// datasets and seeds and fill the old/new columns of one table row.
inline int cmd_simulate(const CliConfig& cfg, std::ostream& log) {
  using detail::json;
  const Scenario sc = scenario_from(cfg);
  log << "scenario: " << io::scenario_json(sc).dump() << '\n';

  io::CoverageRow row{sc.p, sc.n, std::string(to_string(sc.law))};
  json out;
  if (cfg.compare) {
    Scenario old_sc = sc, new_sc = sc;
    old_sc.adjusted = false;
    new_sc.adjusted = true;
    const CoverageReport old_rep = run_coverage(old_sc);
    const CoverageReport new_rep = run_coverage(new_sc);
    row.old_coverage = old_rep.coverage;
    row.new_coverage = new_rep.coverage;
    out = json{{"unadjusted", io::coverage_json(old_rep)}, {"adjusted", io::coverage_json(new_rep)}};
    log << "elapsed " << old_rep.elapsed_seconds + new_rep.elapsed_seconds << " s\n";
  } else {
    const CoverageReport rep = run_coverage(sc);
    (sc.adjusted ? row.new_coverage : row.old_coverage) = rep.coverage;
    out = io::coverage_json(rep);
    log << "elapsed " << rep.elapsed_seconds << " s\n";
  }
  const std::string table = io::coverage_table_csv({row});
  if (!cfg.table.empty()) io::write_file(cfg.table, table);
  detail::emit(cfg, cfg.csv ? table : out.dump(2) + "\n");
  return kExitOk;
}

inline int run(const CliConfig& cfg, std::ostream& log) {
  switch (cfg.subcommand) {
    case Subcommand::Estimate: return cmd_estimate(cfg, log);
    case Subcommand::Bands: return cmd_bands(cfg, log);
    case Subcommand::Simulate: return cmd_simulate(cfg, log);
  }
  return kExitUsage;
}

/// Runs `cfg`, mapping failures to exit codes and messages on `log`.
inline int run_guarded(const CliConfig& cfg, std::ostream& log) {
  try {
    return run(cfg, log);
  } catch (const UsageError& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    log << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const BandError& e) {
    log << "error: " << e.what();
    if (e.time()) log << " (time " << io::format_double(*e.time()) << ")";
    log << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}

}  // namespace crboot::cli
