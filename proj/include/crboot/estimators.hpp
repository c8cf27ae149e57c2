#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crboot/event_data.hpp"
#include "crboot/numeric.hpp"
#include "crboot/step_curve.hpp"

namespace crboot {

namespace detail {

inline void check_cause(const RiskTable& rt, int cause, const char* who) {
  if (cause < 1 || cause > rt.k()) {
    throw std::invalid_argument(std::string(who) + ": cause must be in 1.." + std::to_string(rt.k()));
  }
}

template <class Increment>
StepCurve cumulative(const RiskTable& rt, Increment inc) {
  std::vector<double> values(rt.size());
  CompensatedSum acc;
  for (std::size_t l = 0; l < rt.size(); ++l) {
    acc += inc(l);
    values[l] = acc.get();
  }
  return StepCurve(rt.times(), std::move(values), 0.0);
}

}  // namespace detail

/// Nelson-Aalen estimator of the cause-specific cumulative hazard.
inline StepCurve nelson_aalen(const RiskTable& rt, int cause) {
  detail::check_cause(rt, cause, "nelson_aalen");
  return detail::cumulative(rt, [&](std::size_t l) -> long double {
    return safe_ratio(rt.jumps(cause, l), rt.at_risk(l));
  });
}

/// Greenwood-type variance n * sum (Y - dN_j) dN_j / Y^3.
inline StepCurve greenwood_variance(const RiskTable& rt, int cause) {
  detail::check_cause(rt, cause, "greenwood_variance");
  const long double n = static_cast<long double>(rt.n());
  return detail::cumulative(rt, [&](std::size_t l) -> long double {
    const long double y = rt.at_risk(l);
    const long double d = rt.jumps(cause, l);
    if (y == 0) return 0.0L;
    return n * (y - d) * d / (y * y * y);
  });
}

/// Classical (tie-ignoring) variance n * sum dN_j / Y^2.
inline StepCurve unadjusted_variance(const RiskTable& rt, int cause) {
  detail::check_cause(rt, cause, "unadjusted_variance");
  const long double n = static_cast<long double>(rt.n());
  return detail::cumulative(rt, [&](std::size_t l) -> long double {
    const long double y = rt.at_risk(l);
    if (y == 0) return 0.0L;
    return n * rt.jumps(cause, l) / (y * y);
  });
}

/// Greenwood-type covariance -n * sum dN_j dN_l / Y^3 for j != l.
inline StepCurve greenwood_covariance(const RiskTable& rt, int cause_a, int cause_b) {
  detail::check_cause(rt, cause_a, "greenwood_covariance");
  detail::check_cause(rt, cause_b, "greenwood_covariance");
  if (cause_a == cause_b) throw std::invalid_argument("greenwood_covariance: causes must differ");
  const long double n = static_cast<long double>(rt.n());
  return detail::cumulative(rt, [&](std::size_t l) -> long double {
    const long double y = rt.at_risk(l);
    if (y == 0) return 0.0L;
    return -n * rt.jumps(cause_a, l) * rt.jumps(cause_b, l) / (y * y * y);
  });
}

/// All-cause Kaplan-Meier product limit.
inline StepCurve kaplan_meier(const RiskTable& rt) {
  std::vector<double> values(rt.size());
  long double s = 1.0L;
  for (std::size_t l = 0; l < rt.size(); ++l) {
    const long double y = rt.at_risk(l);
    if (y > 0) s *= 1.0L - static_cast<long double>(rt.total_jumps(l)) / y;
    values[l] = static_cast<double>(s);
  }
  return StepCurve(rt.times(), std::move(values), 1.0);
}

/// Aalen-Johansen estimator sum S(u-) dN_j(u) / Y(u).
inline StepCurve aalen_johansen(const RiskTable& rt, int cause) {
  detail::check_cause(rt, cause, "aalen_johansen");
  std::vector<double> values(rt.size());
  long double s_left = 1.0L;
  CompensatedSum f;
  for (std::size_t l = 0; l < rt.size(); ++l) {
    const long double y = rt.at_risk(l);
    if (y > 0) {
      f += s_left * rt.jumps(cause, l) / y;
      s_left *= 1.0L - static_cast<long double>(rt.total_jumps(l)) / y;
    }
    values[l] = f.get();
  }
  return StepCurve(rt.times(), std::move(values), 0.0);
}

/// Where the integrands of the Aalen-Johansen functional read F1, F2 at a
/// jump time u. `AtJump` uses F(u), the value after the jump, which is the
/// first-order expansion of the estimator when u carries ties. `BeforeJump`
/// uses F(u-); the two agree on tie-free continuous data.
enum class JumpConvention { AtJump, BeforeJump };

/// Per-grid ingredients of the plug-in Aalen-Johansen covariance, for the
/// two-risk view (cause 1 = primary, cause 2 = aggregate of the rest).
struct CifIngredients {
  std::vector<double> grid;
  std::vector<double> cif1;         // F1(u)
  std::vector<double> ref1;         // F1 read by the integrands at u
  std::vector<double> ref2;         // F2 read by the integrands at u
  std::vector<double> hazard_jump;  // all-cause dA(u) = dN(u) / Y(u)
  bool jump_weight = true;          // whether integrands carry 1 / (1 - dA(u))
  // increments of the (co)variance measures at each grid time
  std::vector<double> d11, d22, d12, d21;

  long double weight(std::size_t l) const {
    if (!jump_weight) return 1.0L;
    const long double den = 1.0L - hazard_jump[l];
    return 1.0L / (den * den);
  }
};

/// Covariance function (s,t) -> sigma^2_F1(s,t) built from step-function
/// ingredients. Integration stops before the first time with dA(u) = 1.
class CifVariance {
 public:
  CifVariance() = default;

  explicit CifVariance(CifIngredients ing) : ing_(std::move(ing)) {
    const std::size_t m = ing_.grid.size();
    cutoff_ = m;
    for (std::size_t l = 0; l < m; ++l) {
      if (ing_.hazard_jump[l] >= 1.0) {
        cutoff_ = l;
        break;
      }
    }
    build_diagonal();
  }

  /// sigma^2_F1 on the diagonal, as a step curve on the event grid.
  const StepCurve& diagonal() const { return diag_; }

  double operator()(double s, double t) const {
    const double lo = std::min(s, t);
    const double fs = cif1_at(s);
    const double ft = cif1_at(t);
    CompensatedSum acc;
    for (std::size_t l = 0; l < cutoff_ && ing_.grid[l] <= lo; ++l) {
      const long double a = 1.0L - ing_.ref2[l];
      const long double b = ing_.ref1[l];
      acc += ing_.weight(l) * ((a - fs) * (a - ft) * ing_.d11[l] + (b - fs) * (b - ft) * ing_.d22[l] +
                               (a - fs) * (b - ft) * ing_.d12[l] + (a - ft) * (b - fs) * ing_.d21[l]);
    }
    return acc.get();
  }

  bool truncated() const { return cutoff_ < ing_.grid.size(); }
  std::optional<double> truncation_time() const {
    if (!truncated()) return std::nullopt;
    return ing_.grid[cutoff_];
  }
  /// Number of leading grid points that enter the integrals.
  std::size_t cutoff_index() const { return cutoff_; }
  const CifIngredients& ingredients() const { return ing_; }

 private:
  double cif1_at(double t) const {
    const auto& g = ing_.grid;
    const auto it = std::upper_bound(g.begin(), g.end(), t);
    if (it == g.begin()) return 0.0;
    return ing_.cif1[static_cast<std::size_t>(it - g.begin()) - 1];
  }

  // diag(t) = P0 - 2 f P1 + f^2 P2 with f = F1(t) and prefix sums over u <= t.
  void build_diagonal() {
    const std::size_t m = ing_.grid.size();
    std::vector<double> values(m, 0.0);
    CompensatedSum p0, p1, p2;
    for (std::size_t l = 0; l < m; ++l) {
      if (l < cutoff_) {
        const long double a = 1.0L - ing_.ref2[l];
        const long double b = ing_.ref1[l];
        const long double w = ing_.weight(l);
        const long double cross = static_cast<long double>(ing_.d12[l]) + ing_.d21[l];
        p0 += w * (a * a * ing_.d11[l] + b * b * ing_.d22[l] + a * b * cross);
        p1 += w * (a * ing_.d11[l] + b * ing_.d22[l] + 0.5L * (a + b) * cross);
        p2 += w * (static_cast<long double>(ing_.d11[l]) + ing_.d22[l] + cross);
      }
      const long double f = ing_.cif1[l];
      const long double v = p0.value() - 2.0L * f * p1.value() + f * f * p2.value();
      values[l] = v > 0.0L ? static_cast<double>(v) : 0.0;
    }
    diag_ = StepCurve(ing_.grid, std::move(values), 0.0);
  }

  CifIngredients ing_;
  std::size_t cutoff_ = 0;
  StepCurve diag_;
};

/// Aalen-Johansen point-estimate ingredients of a two-risk table, with
/// zero measures.
inline CifIngredients cif_ingredients(const RiskTable& two, JumpConvention conv = JumpConvention::AtJump) {
  const std::size_t m = two.size();
  CifIngredients ing;
  ing.grid = two.times();
  ing.cif1.resize(m);
  ing.ref1.resize(m);
  ing.ref2.resize(m);
  ing.hazard_jump.resize(m);
  ing.d11.assign(m, 0.0);
  ing.d22.assign(m, 0.0);
  ing.d12.assign(m, 0.0);
  ing.d21.assign(m, 0.0);
  long double s_left = 1.0L;
  CompensatedSum f1, f2;
  for (std::size_t l = 0; l < m; ++l) {
    const long double y = two.at_risk(l);
    if (conv == JumpConvention::BeforeJump) {
      ing.ref1[l] = f1.get();
      ing.ref2[l] = f2.get();
    }
    ing.hazard_jump[l] = safe_ratio(two.total_jumps(l), two.at_risk(l));
    if (y > 0) {
      f1 += s_left * two.jumps(1, l) / y;
      f2 += s_left * two.jumps(2, l) / y;
      s_left *= 1.0L - static_cast<long double>(two.total_jumps(l)) / y;
    }
    ing.cif1[l] = f1.get();
    if (conv == JumpConvention::AtJump) {
      ing.ref1[l] = f1.get();
      ing.ref2[l] = f2.get();
    }
  }
  return ing;
}

/// Greenwood plug-in covariance of the Aalen-Johansen estimator for `cause`.
inline CifVariance cif_covariance(const RiskTable& rt, int cause, JumpConvention conv = JumpConvention::AtJump) {
  detail::check_cause(rt, cause, "cif_covariance");
  const RiskTable two = collapse_to_two_risks(rt, cause);
  CifIngredients ing = cif_ingredients(two, conv);
  const long double n = static_cast<long double>(two.n());
  for (std::size_t l = 0; l < two.size(); ++l) {
    const long double y = two.at_risk(l);
    if (y == 0) continue;
    const long double y3 = y * y * y;
    const long double d1 = two.jumps(1, l);
    const long double d2 = two.jumps(2, l);
    ing.d11[l] = static_cast<double>(n * (y - d1) * d1 / y3);
    ing.d22[l] = static_cast<double>(n * (y - d2) * d2 / y3);
    ing.d12[l] = static_cast<double>(-n * d1 * d2 / y3);
    ing.d21[l] = ing.d12[l];
  }
  return CifVariance(std::move(ing));
}

/// Variance of the classical continuous-data Aalen-Johansen functional:
/// integrands read F at the jump, carry no 1 / (1 - dA) factor, and
/// integrate the tie-ignoring measures n dN_j / Y^2 with no cross term.
inline CifVariance cif_covariance_unadjusted(const RiskTable& rt, int cause) {
  detail::check_cause(rt, cause, "cif_covariance_unadjusted");
  const RiskTable two = collapse_to_two_risks(rt, cause);
  CifIngredients ing = cif_ingredients(two, JumpConvention::AtJump);
  ing.jump_weight = false;
  const long double n = static_cast<long double>(two.n());
  for (std::size_t l = 0; l < two.size(); ++l) {
    const long double y = two.at_risk(l);
    if (y == 0) continue;
    ing.d11[l] = static_cast<double>(n * two.jumps(1, l) / (y * y));
    ing.d22[l] = static_cast<double>(n * two.jumps(2, l) / (y * y));
  }
  return CifVariance(std::move(ing));
}

}  // namespace crboot
