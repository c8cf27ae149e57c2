#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "crboot/bands.hpp"
#include "crboot/estimators.hpp"
#include "crboot/event_data.hpp"
#include "crboot/multipliers.hpp"
#include "crboot/numeric.hpp"
#include "crboot/parallel.hpp"
#include "crboot/step_curve.hpp"

namespace crboot {

/// Competing-risks model with hazards a1(t) = exp(-t), a2(t) = 1 - exp(-t):
/// all-cause hazard 1, S(t) = exp(-t), F1(t) = (1 - exp(-2t)) / 2.
namespace model {
inline double survival(double t) { return t <= 0.0 ? 1.0 : std::exp(-t); }
inline double cif1(double t) { return t <= 0.0 ? 0.0 : 0.5 * -std::expm1(-2.0 * t); }
inline double cif2(double t) { return t <= 0.0 ? 0.0 : 1.0 - survival(t) - cif1(t); }
inline double cif(int cause, double t) { return cause == 1 ? cif1(t) : cif2(t); }
}  // namespace model

struct Scenario {
  double p = 1.0;         // probability a subject's times are discretized
  int lattice = 5;        // lattice {0, 1/k, 2/k, ...}
  std::size_t n = 50;
  MultiplierLaw law = MultiplierLaw::CenteredPoisson;
  BandType band = BandType::EqualPrecision;
  bool adjusted = true;
  double t1 = 0.25;
  double t2 = 0.75;
  double level = 0.95;
  std::size_t mc_reps = 2000;
  std::size_t replicates = 999;
  std::uint64_t seed = 20240601;
  unsigned threads = 1;

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("scenario: p must lie in [0,1]");
    if (lattice < 1) throw std::invalid_argument("scenario: lattice must be a positive integer");
    if (n < 1) throw std::invalid_argument("scenario: n must be >= 1");
    if (mc_reps < 1) throw std::invalid_argument("scenario: mc_reps must be >= 1");
    if (replicates < 1) throw std::invalid_argument("scenario: reps must be >= 1");
    if (!(t1 < t2) || t1 < 0.0) throw std::invalid_argument("scenario: interval needs 0 <= t1 < t2");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("scenario: level must lie in (0,1)");
  }

  BandSpec band_spec() const {
    BandSpec s;
    s.type = band;
    s.level = level;
    s.t1 = t1;
    s.t2 = t2;
    s.replicates = replicates;
    s.adjusted = adjusted;
    s.law = law;
    s.threads = 1;
    return s;
  }
};

/// Nearest lattice point, halves rounded up.
inline double round_to_lattice(double s, int k) {
  return std::floor(s * k + 0.5) / static_cast<double>(k);
}

/// P(cause = 1 | discretized event time = u).
inline double discrete_cause1_probability(double u, int k) {
  const double h = 0.5 / k;
  const double lo = std::max(u - h, 0.0);
  const double hi = u + h;
  return (model::cif1(hi) - model::cif1(lo)) / (model::survival(lo) - model::survival(hi));
}

/// One simulated cohort (k = 2 risks) for outer replicate `rep`.
inline Cohort generate_dataset(const Scenario& sc, std::uint64_t rep) {
  std::mt19937_64 eng(derive_seed(sc.seed, stream::kDataset, rep));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  std::vector<Observation> obs(sc.n);
  for (auto& o : obs) {
    const bool discrete = unif(eng) < sc.p;
    double t = expo(eng);
    double c = expo(eng);
    const double v = unif(eng);
    int cause;
    if (discrete) {
      t = round_to_lattice(t, sc.lattice);
      c = round_to_lattice(c, sc.lattice);
      cause = v < discrete_cause1_probability(t, sc.lattice) ? 1 : 2;
    } else {
      cause = v < std::exp(-t) ? 1 : 2;
    }
    if (c < t) {
      o = {c, 0};
    } else {
      o = {t, cause};
    }
  }
  return Cohort(std::move(obs), 2);
}

/// Target of the band: p F1(([kt - 1/2] + 1/2)/k) + (1 - p) F1(t), with the
/// bracket the nearest integer (halves rounded up, so [kt - 1/2] = floor(kt)).
inline double true_cif(const Scenario& sc, double t) {
  const double k = sc.lattice;
  const double snapped = (std::floor(k * t + 1e-9) + 0.5) / k;
  const double disc = t < 0.0 ? 0.0 : model::cif1(snapped);
  return sc.p * disc + (1.0 - sc.p) * model::cif1(t);
}

/// Limits of the estimators under the scenario, computed from the observable
/// sub-distributions: lattice atoms exactly and the continuous part on a
/// fine grid (midpoint rule). For 0 < p < 1 the censoring of a subject is
/// coupled to its discretization, so the Aalen-Johansen limit here is the
/// crude-hazard functional rather than F1 of the scenario.
class LimitMoments {
 public:
  LimitMoments(const Scenario& sc, double horizon, double step = 1e-4) : sc_(sc) {
    if (!(horizon > 0.0) || !(step > 0.0)) throw std::invalid_argument("LimitMoments: bad horizon or step");
    build(horizon, step);
  }

  /// P(X >= u) for the observed time X.
  double at_risk_probability(double u) const {
    const double disc = sc_.p > 0.0 ? discrete_ge(u) : 0.0;
    return sc_.p * disc * disc + (1.0 - sc_.p) * std::exp(-2.0 * u);
  }

  const StepCurve& hazard(int j) const { return j == 1 ? a1_ : a2_; }
  const StepCurve& cif(int j) const { return j == 1 ? f1_ : f2_; }
  const StepCurve& variance(int j) const { return j == 1 ? v1_ : v2_; }
  const StepCurve& covariance() const { return c12_; }
  const StepCurve& unadjusted_variance(int j) const { return j == 1 ? u1_ : u2_; }
  const CifVariance& cif_variance() const { return cifvar_; }

 private:
  // P(discretized T >= u) = S(l - h) with l the smallest lattice point >= u.
  double discrete_ge(double u) const {
    const double k = sc_.lattice;
    const double l = std::ceil(u * k - 1e-9) / k;
    return model::survival(std::max(l - 0.5 / k, 0.0));
  }

  void build(double horizon, double step) {
    const int k = sc_.lattice;
    const double p = sc_.p;
    // Grid: uniform cells plus every lattice point in [0, horizon].
    std::vector<double> grid;
    std::vector<char> is_lattice;
    {
      const auto cells = static_cast<std::size_t>(std::ceil(horizon / step));
      std::vector<std::pair<double, char>> pts;
      for (std::size_t i = 0; i <= cells; ++i) pts.emplace_back(std::min(horizon, i * step), 0);
      if (p > 0.0)
        for (int j = 0; j / static_cast<double>(k) <= horizon; ++j) pts.emplace_back(j / static_cast<double>(k), 1);
      std::sort(pts.begin(), pts.end());
      for (const auto& [t, lat] : pts) {
        if (!grid.empty() && std::fabs(t - grid.back()) < 1e-12) {
          if (lat) {
            grid.back() = t;
            is_lattice.back() = 1;
          }
          continue;
        }
        grid.push_back(t);
        is_lattice.push_back(lat);
      }
    }
    const std::size_t m = grid.size();
    std::vector<double> da1(m, 0.0), da2(m, 0.0), dv1(m, 0.0), dv2(m, 0.0), dc(m, 0.0), du1(m, 0.0), du2(m, 0.0);
    CifIngredients ing;
    ing.grid = grid;
    ing.cif1.resize(m);
    ing.ref1.resize(m);
    ing.ref2.resize(m);
    ing.hazard_jump.assign(m, 0.0);
    ing.d11.assign(m, 0.0);
    ing.d22.assign(m, 0.0);
    ing.d12.assign(m, 0.0);
    ing.d21.assign(m, 0.0);
    std::vector<double> f2v(m), sv(m);
    long double s = 1.0L, f1 = 0.0L, f2 = 0.0L;
    const double h = 0.5 / k;
    for (std::size_t i = 0; i < m; ++i) {
      const double u = grid[i];
      // Continuous part over the open cell (grid[i-1], grid[i]).
      if (i > 0 && p < 1.0) {
        const double width = u - grid[i - 1];
        const double mid = 0.5 * (u + grid[i - 1]);
        const double hb = at_risk_probability(mid);
        const double e = std::exp(-mid);
        const double c1 = (1.0 - p) * e * e * e * width / hb;
        const double c2 = (1.0 - p) * (1.0 - e) * e * e * width / hb;
        da1[i] += c1;
        da2[i] += c2;
        dv1[i] += c1 / hb;
        dv2[i] += c2 / hb;
        du1[i] += c1 / hb;
        du2[i] += c2 / hb;
        ing.d11[i] += c1 / hb;
        ing.d22[i] += c2 / hb;
        const long double ct = c1 + c2;
        if (ct > 0.0L) {
          const long double mass = s * -std::expm1(-ct);
          f1 += mass * c1 / ct;
          f2 += mass * c2 / ct;
          s *= std::exp(-ct);
        }
      }
      // Lattice atom at u.
      if (is_lattice[i] && p > 0.0) {
        const double hb = at_risk_probability(u);
        const double lo = std::max(u - h, 0.0);
        const double hi = u + h;
        const double ge = discrete_ge(u);
        const double a1 = p * (model::cif1(hi) - model::cif1(lo)) * ge / hb;
        const double a2 = p * (model::cif2(hi) - model::cif2(lo)) * ge / hb;
        da1[i] += a1;
        da2[i] += a2;
        dv1[i] += (1.0 - a1) * a1 / hb;
        dv2[i] += (1.0 - a2) * a2 / hb;
        dc[i] += -a1 * a2 / hb;
        du1[i] += a1 / hb;
        du2[i] += a2 / hb;
        ing.d11[i] += (1.0 - a1) * a1 / hb;
        ing.d22[i] += (1.0 - a2) * a2 / hb;
        ing.d12[i] += -a1 * a2 / hb;
        ing.d21[i] += -a1 * a2 / hb;
        ing.hazard_jump[i] = a1 + a2;
        f1 += s * a1;
        f2 += s * a2;
        s *= 1.0L - (a1 + a2);
      }
      ing.cif1[i] = static_cast<double>(f1);
      ing.ref1[i] = static_cast<double>(f1);
      ing.ref2[i] = static_cast<double>(f2);
      f2v[i] = static_cast<double>(f2);
      sv[i] = static_cast<double>(s);
    }
    a1_ = cumulate(grid, da1);
    a2_ = cumulate(grid, da2);
    v1_ = cumulate(grid, dv1);
    v2_ = cumulate(grid, dv2);
    c12_ = cumulate(grid, dc);
    u1_ = cumulate(grid, du1);
    u2_ = cumulate(grid, du2);
    f1_ = StepCurve(grid, ing.cif1);
    f2_ = StepCurve(grid, std::move(f2v));
    cifvar_ = CifVariance(std::move(ing));
  }

  Scenario sc_;
  StepCurve a1_, a2_, f1_, f2_, v1_, v2_, c12_, u1_, u2_;
  CifVariance cifvar_;
};

inline LimitMoments true_limit_moments(const Scenario& sc, double horizon = 1.0, double step = 1e-4) {
  return LimitMoments(sc, horizon, step);
}

struct CoverageReport {
  Scenario scenario;
  std::size_t covered = 0;
  std::size_t valid = 0;
  std::size_t degenerate = 0;
  double coverage = 0.0;
  double standard_error = 0.0;
  double degenerate_rate = 0.0;
  double mean_q = 0.0;
  double mean_area = 0.0;  // mean over valid replicates of sum (upper - lower) over band times
  double elapsed_seconds = 0.0;

  bool same_outcome(const CoverageReport& o) const {
    return covered == o.covered && valid == o.valid && degenerate == o.degenerate && mean_q == o.mean_q &&
           mean_area == o.mean_area;
  }
};

/// Left limit of true_cif at t.
inline double true_cif_left(const Scenario& sc, double t) {
  const double k = sc.lattice;
  const double snapped = (std::ceil(k * t - 1e-9) - 0.5) / k;
  return sc.p * model::cif1(snapped) + (1.0 - sc.p) * model::cif1(t);
}

/// Whether the step band contains the true cumulative incidence on the part
/// of [t1, t2] it spans. Band value i holds on [times[i], times[i+1]); the
/// truth is nondecreasing, so each piece is checked at its two ends.
inline bool band_covers(const BandResult& band, const Scenario& sc) {
  const std::size_t m = band.times.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double a = std::max(band.times[i], band.spec.t1);
    const double lo = true_cif(sc, a);
    const double hi = i + 1 < m ? true_cif_left(sc, band.times[i + 1]) : true_cif(sc, band.spec.t2);
    if (band.lower[i] > lo || band.upper[i] < hi) return false;
  }
  return true;
}

/// Monte Carlo coverage of the Aalen-Johansen band for cause 1. Outer
/// replicates run on sc.threads workers, each band single-threaded.
/// Replicates whose band cannot be built are counted as degenerate and
/// left out of the coverage denominator.
inline CoverageReport run_coverage(const Scenario& sc) {
  sc.validate();
  const auto start = std::chrono::steady_clock::now();
  const BandSpec spec = sc.band_spec();
  std::vector<signed char> outcome(sc.mc_reps, -1);
  std::vector<double> qs(sc.mc_reps, 0.0), areas(sc.mc_reps, 0.0);
  parallel_for(sc.mc_reps, resolve_threads(sc.threads), [&](std::size_t r, unsigned) {
    const RiskTable rt = build_risk_table(generate_dataset(sc, r));
    try {
      const BandResult band = build_band(rt, 1, spec, derive_seed(sc.seed, stream::kBand, r));
      outcome[r] = band_covers(band, sc) ? 1 : 0;
      qs[r] = band.q;
      double area = 0.0;
      for (std::size_t i = 0; i < band.times.size(); ++i) area += band.upper[i] - band.lower[i];
      areas[r] = area;
    } catch (const BandError&) {
      outcome[r] = -1;
    }
  });
  CoverageReport rep;
  rep.scenario = sc;
  CompensatedSum q_sum, a_sum;
  for (std::size_t r = 0; r < sc.mc_reps; ++r) {
    if (outcome[r] < 0) {
      ++rep.degenerate;
      continue;
    }
    ++rep.valid;
    rep.covered += static_cast<std::size_t>(outcome[r]);
    q_sum += qs[r];
    a_sum += areas[r];
  }
  if (rep.valid > 0) {
    rep.coverage = static_cast<double>(rep.covered) / static_cast<double>(rep.valid);
    rep.standard_error = std::sqrt(rep.coverage * (1.0 - rep.coverage) / static_cast<double>(rep.valid));
    rep.mean_q = q_sum.get() / static_cast<double>(rep.valid);
    rep.mean_area = a_sum.get() / static_cast<double>(rep.valid);
  }
  rep.degenerate_rate = static_cast<double>(rep.degenerate) / static_cast<double>(sc.mc_reps);
  rep.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

/// Parses a key=value scenario file. Blank lines and lines starting with
/// '#' are skipped. Keys: p, lattice, n, multiplier, band, adjusted,
/// interval (two numbers), t1, t2, level, mc_reps, reps, seed, threads.
inline Scenario parse_scenario(std::string_view text, Scenario base = {}) {
  Scenario sc = base;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    const std::string_view raw = detail::trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (raw.empty() || raw.front() == '#') {
      if (end == text.size()) break;
      continue;
    }
    const std::size_t eq = raw.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value at line " + std::to_string(line_no), line_no);
    const std::string key(detail::trim(raw.substr(0, eq)));
    const std::string value(detail::trim(raw.substr(eq + 1)));
    std::istringstream is(value);
    auto fail = [&]() -> ParseError {
      return ParseError("bad value '" + value + "' for '" + key + "' at line " + std::to_string(line_no), line_no);
    };
    bool numeric = false;
    auto read = [&](auto& dst) {
      numeric = true;
      if constexpr (std::is_unsigned_v<std::remove_reference_t<decltype(dst)>>) {
        if (value.find('-') != std::string::npos) throw fail();
      }
      if (!(is >> dst)) throw fail();
    };
    try {
      if (key == "p") read(sc.p);
      else if (key == "lattice" || key == "k") read(sc.lattice);
      else if (key == "n") read(sc.n);
      else if (key == "multiplier") sc.law = parse_multiplier_law(value);
      else if (key == "band") sc.band = parse_band_type(value);
      else if (key == "adjusted") {
        if (value == "true" || value == "1" || value == "yes") sc.adjusted = true;
        else if (value == "false" || value == "0" || value == "no") sc.adjusted = false;
        else throw fail();
      } else if (key == "interval") {
        read(sc.t1);
        read(sc.t2);
      } else if (key == "t1") read(sc.t1);
      else if (key == "t2") read(sc.t2);
      else if (key == "level") read(sc.level);
      else if (key == "mc_reps") read(sc.mc_reps);
      else if (key == "reps") read(sc.replicates);
      else if (key == "seed") read(sc.seed);
      else if (key == "threads") read(sc.threads);
      else throw ParseError("unknown key '" + key + "' at line " + std::to_string(line_no), line_no);
    } catch (const std::invalid_argument& e) {
      throw ParseError(std::string(e.what()) + " at line " + std::to_string(line_no), line_no);
    }
    std::string rest;
    if (numeric && is >> rest) throw fail();
    if (end == text.size()) break;
  }
  return sc;
}

}  // namespace crboot
