#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "crboot/estimators.hpp"
#include "crboot/event_data.hpp"
#include "crboot/multipliers.hpp"
#include "crboot/parallel.hpp"
#include "crboot/resampling.hpp"
#include "crboot/step_curve.hpp"

namespace crboot {

enum class BandType { EqualPrecision, HallWellner };

inline std::string_view to_string(BandType t) { return t == BandType::EqualPrecision ? "ep" : "hw"; }

inline BandType parse_band_type(std::string_view s) {
  if (s == "ep") return BandType::EqualPrecision;
  if (s == "hw") return BandType::HallWellner;
  throw std::invalid_argument("unknown band type '" + std::string(s) + "' (ep|hw)");
}

/// Grid times making up the band on [t1, t2]. `InEffect` adds the last grid
/// time before t1, whose value holds at t1, so the band covers all of
/// [t1, t2]; `Inward` keeps only grid times inside [t1, t2].
enum class WindowRule { InEffect, Inward };

struct BandSpec {
  WindowRule window = WindowRule::InEffect;
  BandType type = BandType::EqualPrecision;
  double level = 0.95;
  double t1 = 0.0;
  double t2 = 0.0;
  std::size_t replicates = 999;
  bool adjusted = true;
  MultiplierLaw law = MultiplierLaw::CenteredPoisson;
  unsigned threads = 1;
  JumpConvention convention = JumpConvention::AtJump;

  void validate() const {
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("band level must lie in (0,1)");
    if (!(t1 < t2)) throw std::invalid_argument("band interval needs t1 < t2");
    if (t1 < 0.0) throw std::invalid_argument("band interval must start at or after 0");
    if (replicates < 1) throw std::invalid_argument("band needs at least one bootstrap replicate");
  }
};

/// Band construction failure, tagged with the offending time when there is one.
class BandError : public std::runtime_error {
 public:
  explicit BandError(const std::string& what, std::optional<double> time = std::nullopt)
      : std::runtime_error(what), time_(time) {}
  std::optional<double> time() const { return time_; }

 private:
  std::optional<double> time_;
};

/// log(-log(1 - s)) on (0,1).
inline double transform_phi(double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("transform_phi: argument outside (0,1)");
  return std::log(-std::log1p(-s));
}

inline double transform_phi_derivative(double s) {
  if (!(s > 0.0 && s < 1.0)) throw std::domain_error("transform_phi_derivative: argument outside (0,1)");
  return -1.0 / ((1.0 - s) * std::log1p(-s));
}

struct WeightFunctions {
  StepCurve equal_precision;  // g1 = log(1 - F) / rho
  StepCurve hall_wellner;     // g2 = log(1 - F) / (1 + rho^2)
  StepCurve rho_squared;      // sigma^2 / (1 - F)^2

  const StepCurve& get(BandType t) const { return t == BandType::EqualPrecision ? equal_precision : hall_wellner; }
};

namespace detail {
inline std::string time_str(double t) {
  std::ostringstream os;
  os.precision(17);
  os << t;
  return os.str();
}
}  // namespace detail

/// Weight functions on the grid of `cif` (already restricted to the band
/// window). Both curves must share a grid.
inline WeightFunctions weight_functions(const StepCurve& cif, const StepCurve& variance) {
  if (cif.grid() != variance.grid()) throw std::invalid_argument("weight_functions: curves on different grids");
  const std::size_t m = cif.size();
  std::vector<double> g1(m), g2(m), r2(m);
  for (std::size_t l = 0; l < m; ++l) {
    const double f = cif.value_at(l);
    const double v = variance.value_at(l);
    const double t = cif.time_at(l);
    if (!(f > 0.0 && f < 1.0))
      throw BandError("cumulative incidence estimate " + detail::time_str(f) + " outside (0,1) at time " +
                          detail::time_str(t),
                      t);
    if (!(v > 0.0)) throw BandError("variance estimate is zero at time " + detail::time_str(t), t);
    const double one_minus = 1.0 - f;
    const double rho2 = v / (one_minus * one_minus);
    const double lg = std::log1p(-f);
    r2[l] = rho2;
    g1[l] = lg / std::sqrt(rho2);
    g2[l] = lg / (1.0 + rho2);
  }
  return {StepCurve(cif.grid(), std::move(g1)), StepCurve(cif.grid(), std::move(g2)),
          StepCurve(cif.grid(), std::move(r2))};
}

/// sup over grid times u in [t1,t2] of |g(u) phi'(F(u)) W(u)|.
inline double sup_statistic(const StepCurve& path, const StepCurve& g, const StepCurve& cif, double t1, double t2) {
  bool any = false;
  double best = 0.0;
  for (std::size_t l = 0; l < path.size(); ++l) {
    const double u = path.time_at(l);
    if (u < t1 || u > t2) continue;
    any = true;
    const double v = std::fabs(g(u) * transform_phi_derivative(cif(u)) * path.value_at(l));
    best = std::max(best, v);
  }
  if (!any) throw BandError("no grid time inside the band interval");
  return best;
}

/// Rank (1-based) of the order statistic used as the level-quantile of B values.
inline std::size_t quantile_rank(double level, std::size_t count) {
  const double r = std::ceil(level * static_cast<double>(count) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(r, 1.0)), 1, count);
}

inline double empirical_quantile(std::vector<double> values, double level) {
  if (values.empty()) throw std::invalid_argument("empirical_quantile: no values");
  const std::size_t r = quantile_rank(level, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(r - 1), values.end());
  return values[r - 1];
}

/// Band boundaries 1 - (1 - F)^exp(+-q / (sqrt(n) g)); returns (lower, upper).
inline std::pair<double, double> band_limits(double cif, double g, double q, std::size_t n) {
  const double e = q / (std::sqrt(static_cast<double>(n)) * g);
  const double one_minus = 1.0 - cif;
  const double a = 1.0 - std::pow(one_minus, std::exp(e));
  const double b = 1.0 - std::pow(one_minus, std::exp(-e));
  return {std::min(a, b), std::max(a, b)};
}

struct BandResult {
  std::vector<double> times;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> estimate;
  std::vector<double> variance;  // data-side sigma^2_F1(t,t)
  std::vector<double> weight;    // data-side g_j(t)
  double q = 0.0;
  std::vector<double> sup_stats;
  BandSpec spec;
  int cause = 1;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;

  bool contains(std::size_t i, double value) const { return lower[i] <= value && value <= upper[i]; }
};

namespace detail {

// Path values below this are rounding residue of an exactly cancelling sum.
inline constexpr double kPathZero = 1e-10;

// |g_hat phi'(F) W| for the bootstrap-side weight built from `var`.
inline double weighted_abs(BandType type, double f, double var, double w) {
  if (w == 0.0) return 0.0;
  if (!(var > 0.0) && std::fabs(w) < kPathZero) return 0.0;
  if (!(var > 0.0)) return type == BandType::EqualPrecision ? std::numeric_limits<double>::infinity()
                                                            : std::fabs(w) / (1.0 - f);
  const double one_minus = 1.0 - f;
  const double rho2 = var / (one_minus * one_minus);
  const double lg = std::log1p(-f);
  const double g = type == BandType::EqualPrecision ? lg / std::sqrt(rho2) : lg / (1.0 + rho2);
  return std::fabs(g * transform_phi_derivative(f) * w);
}

}  // namespace detail

/// Simultaneous band for the cumulative incidence of `cause` on the grid
/// times inside [t1, t2]. Boundaries use the data-side weight g_j; the sup
/// statistic uses its bootstrap counterpart built from each replicate's
/// optional-variation variance.
inline BandResult build_band(const RiskTable& rt, int cause, const BandSpec& spec, std::uint64_t seed) {
  spec.validate();
  detail::check_cause(rt, cause, "build_band");
  const Scheme scheme = spec.adjusted ? Scheme::Adjusted : Scheme::Unadjusted;

  BandResult res;
  res.spec = spec;
  res.cause = cause;
  res.n = rt.n();
  res.seed = seed;

  const CifVariance data_var = spec.adjusted ? cif_covariance(rt, cause, spec.convention) : cif_covariance_unadjusted(rt, cause);
  const auto& ing = data_var.ingredients();
  const auto& grid = ing.grid;

  std::vector<std::size_t> window;
  for (std::size_t l = 0; l < grid.size(); ++l) {
    const bool holds_at_t1 = spec.window == WindowRule::InEffect && grid[l] < spec.t1 &&
                             (l + 1 == grid.size() || grid[l + 1] > spec.t1);
    if (!holds_at_t1 && (grid[l] < spec.t1 || grid[l] > spec.t2)) continue;
    if (l >= data_var.cutoff_index()) {
      res.warnings.push_back("band interval clipped before time " + detail::time_str(grid[l]) +
                             " where every subject at risk fails");
      break;
    }
    window.push_back(l);
  }
  if (window.empty()) throw BandError("no event time inside the band interval");

  std::vector<double> wt, wf, wv;
  for (std::size_t l : window) {
    wt.push_back(grid[l]);
    wf.push_back(ing.cif1[l]);
    wv.push_back(data_var.diagonal().value_at(l));
  }
  const StepCurve cif_w(wt, wf), var_w(wt, wv);
  const WeightFunctions wfun = weight_functions(cif_w, var_w);
  const StepCurve& g = wfun.get(spec.type);

  // Bootstrap replicates.
  res.sup_stats.assign(spec.replicates, 0.0);
  const unsigned threads = resolve_threads(spec.threads);
  const RiskTable two = collapse_to_two_risks(rt, cause);
  AalenJohansenBootstrap proto(rt, cause, scheme, VariationForm::AllCause, spec.convention);
  const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(spec.replicates)));
  std::vector<AalenJohansenBootstrap> engines(workers, proto);
  std::vector<MultiplierDraw> draws(workers, MultiplierDraw(2, rt.n(), spec.law, seed, 0));
  std::vector<std::vector<double>> paths(workers), vars(workers);

  parallel_for(spec.replicates, workers, [&](std::size_t b, unsigned w) {
    fill_multipliers(draws[w], two, spec.law, seed, b);
    engines[w].path(draws[w], paths[w]);
    engines[w].variance_diagonal(draws[w], vars[w]);
    double best = 0.0;
    for (std::size_t l : window) {
      best = std::max(best, detail::weighted_abs(spec.type, ing.cif1[l], vars[w][l], paths[w][l]));
    }
    res.sup_stats[b] = best;
  });

  res.q = empirical_quantile(res.sup_stats, spec.level);
  res.times = wt;
  res.estimate = wf;
  res.variance = wv;
  res.weight = g.values();
  res.lower.resize(wt.size());
  res.upper.resize(wt.size());
  for (std::size_t i = 0; i < wt.size(); ++i) {
    const auto [lo, hi] = band_limits(wf[i], res.weight[i], res.q, rt.n());
    res.lower[i] = lo;
    res.upper[i] = hi;
  }
  return res;
}

}  // namespace crboot
