#pragma once

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "crboot/bands.hpp"
#include "crboot/multipliers.hpp"
#include "crboot/resampling.hpp"
#include "crboot/simulation.hpp"
#include "crboot/step_curve.hpp"

namespace crboot::io {

using json = nlohmann::ordered_json;

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline std::string curve_csv(const StepCurve& c) {
  std::string s = "time,value\n";
  for (std::size_t i = 0; i < c.size(); ++i) s += format_double(c.time_at(i)) + ',' + format_double(c.value_at(i)) + '\n';
  return s;
}

/// Parses `time,value` CSV back into a curve with the given initial value.
inline StepCurve parse_curve_csv(const std::string& text, double initial = 0.0) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("time,value", 0) != 0) throw std::runtime_error("curve CSV: missing header");
  std::vector<double> t, v;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("curve CSV: malformed row '" + line + "'");
    t.push_back(std::stod(line.substr(0, comma)));
    v.push_back(std::stod(line.substr(comma + 1)));
  }
  return StepCurve(std::move(t), std::move(v), initial);
}

inline json curve_json(const StepCurve& c) {
  return json{{"times", c.grid()}, {"values", c.values()}, {"initial", c.initial()}};
}

/// Multi-column CSV over a shared grid: `time,<name1>,<name2>,...`.
inline std::string table_csv(const std::vector<double>& grid, const std::vector<std::string>& names,
                             const std::vector<const StepCurve*>& curves) {
  std::string s = "time";
  for (const auto& n : names) s += ',' + n;
  s += '\n';
  for (std::size_t i = 0; i < grid.size(); ++i) {
    s += format_double(grid[i]);
    for (const auto* c : curves) s += ',' + format_double((*c)(grid[i]));
    s += '\n';
  }
  return s;
}

inline json band_spec_json(const BandSpec& s) {
  return json{{"band", std::string(to_string(s.type))},
              {"level", s.level},
              {"interval", {s.t1, s.t2}},
              {"replicates", s.replicates},
              {"adjusted", s.adjusted},
              {"multiplier", std::string(to_string(s.law))}};
}

inline json band_json(const BandResult& b) {
  json spec = band_spec_json(b.spec);
  spec["cause"] = b.cause;
  spec["n"] = b.n;
  spec["seed"] = b.seed;
  return json{{"times", b.times},   {"lower", b.lower},      {"upper", b.upper},
              {"pointEstimate", b.estimate}, {"q", b.q}, {"spec", spec},
              {"warnings", b.warnings}};
}

inline std::string band_csv(const BandResult& b) {
  std::string s = "time,lower,estimate,upper\n";
  for (std::size_t i = 0; i < b.times.size(); ++i) {
    s += format_double(b.times[i]) + ',' + format_double(b.lower[i]) + ',' + format_double(b.estimate[i]) + ',' +
         format_double(b.upper[i]) + '\n';
  }
  return s;
}

/// Long-format replicate dump `replicate,time,value`.
inline std::string replicate_paths_csv(const std::vector<BootstrapPath>& paths) {
  std::string s = "replicate,time,value\n";
  for (const auto& p : paths)
    for (std::size_t i = 0; i < p.curve.size(); ++i)
      s += std::to_string(p.replicate) + ',' + format_double(p.curve.time_at(i)) + ',' +
           format_double(p.curve.value_at(i)) + '\n';
  return s;
}

inline json scenario_json(const Scenario& sc) {
  return json{{"p", sc.p},
              {"lattice", sc.lattice},
              {"n", sc.n},
              {"multiplier", std::string(to_string(sc.law))},
              {"band", std::string(to_string(sc.band))},
              {"adjusted", sc.adjusted},
              {"interval", {sc.t1, sc.t2}},
              {"level", sc.level},
              {"mc_reps", sc.mc_reps},
              {"reps", sc.replicates},
              {"seed", sc.seed}};
}

/// Deterministic part of a coverage report (wall-clock time left out).
inline json coverage_json(const CoverageReport& r) {
  return json{{"scenario", scenario_json(r.scenario)},
              {"coverage", r.coverage},
              {"standardError", r.standard_error},
              {"covered", r.covered},
              {"valid", r.valid},
              {"degenerate", r.degenerate},
              {"degenerateRate", r.degenerate_rate},
              {"meanQuantile", r.mean_q},
              {"meanArea", r.mean_area}};
}

/// Rows shaped like the coverage tables: p, n, then old/new per law (percent).
struct CoverageRow {
  double p = 0.0;
  std::size_t n = 0;
  std::string law;
  double old_coverage = -1.0;  // negative when not run
  double new_coverage = -1.0;
};

inline std::string coverage_table_csv(const std::vector<CoverageRow>& rows) {
  std::string s = "p,n,multiplier,old,new\n";
  auto pct = [](double c) {
    if (c < 0.0) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", 100.0 * c);
    return std::string(buf);
  };
  for (const auto& r : rows)
    s += format_double(r.p) + ',' + std::to_string(r.n) + ',' + r.law + ',' + pct(r.old_coverage) + ',' +
         pct(r.new_coverage) + '\n';
  return s;
}

}  // namespace crboot::io
