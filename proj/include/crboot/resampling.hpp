#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "crboot/estimators.hpp"
#include "crboot/event_data.hpp"
#include "crboot/multipliers.hpp"
#include "crboot/numeric.hpp"
#include "crboot/step_curve.hpp"

namespace crboot {

enum class PathKind { UnivariateAdjusted, MultivariateAdjusted, Unadjusted, AalenJohansen };

/// Wild bootstrap scheme: the discontinuity-adjusted multipliers, or the
/// classical tie-ignoring one (kept for old/new comparisons).
enum class Scheme { Adjusted, Unadjusted };

/// Which weight the first term of the optional-variation variance uses.
/// `AllCause` uses (Y - dN)/Y^3, the squared first-term weight of the
/// multivariate path, so that xi^2 = 1 reproduces the Greenwood estimators.
/// `CauseSpecific` uses (Y - dN_j)/Y^3 in the first term, as printed in the
/// source display; it exceeds Greenwood by the cross-cause ties.
enum class VariationForm { AllCause, CauseSpecific };

struct BootstrapPath {
  StepCurve curve;
  PathKind kind = PathKind::MultivariateAdjusted;
  int cause = 1;
  std::uint64_t replicate = 0;
};

namespace detail {

inline void check_draw(const RiskTable& rt, const MultiplierDraw& draw, int min_k, const char* who) {
  if (draw.n() != rt.n()) throw std::invalid_argument(std::string(who) + ": draw has wrong subject count");
  if (draw.k() < min_k) throw std::invalid_argument(std::string(who) + ": draw has too few risks");
}

inline int sign(int x) { return (x > 0) - (x < 0); }

}  // namespace detail

/// Univariate adjusted path: weight sqrt((Y - dN_j)/Y) and multipliers xi_{jji}.
inline BootstrapPath wild_bootstrap_univariate(const RiskTable& rt, int cause, const MultiplierDraw& draw) {
  detail::check_cause(rt, cause, "wild_bootstrap_univariate");
  detail::check_draw(rt, draw, cause, "wild_bootstrap_univariate");
  const double root_n = std::sqrt(static_cast<double>(rt.n()));
  std::vector<double> inc(rt.size(), 0.0);
  for (const auto& e : rt.subject_events()) {
    if (e.cause != cause) continue;
    const double y = rt.at_risk(e.time_index);
    const double d = rt.jumps(cause, e.time_index);
    inc[e.time_index] += draw(cause, cause, e.subject) * root_n * std::sqrt((y - d) / y) / y;
  }
  return {cumulate(rt.times(), inc), PathKind::UnivariateAdjusted, cause, draw.replicate()};
}

/// Classical path sqrt(n) sum xi_i dN_{ji} / Y, using xi_{jji}.
inline BootstrapPath wild_bootstrap_unadjusted(const RiskTable& rt, int cause, const MultiplierDraw& draw) {
  detail::check_cause(rt, cause, "wild_bootstrap_unadjusted");
  detail::check_draw(rt, draw, cause, "wild_bootstrap_unadjusted");
  const double root_n = std::sqrt(static_cast<double>(rt.n()));
  std::vector<double> inc(rt.size(), 0.0);
  for (const auto& e : rt.subject_events()) {
    if (e.cause != cause) continue;
    inc[e.time_index] += draw(cause, cause, e.subject) * root_n / rt.at_risk(e.time_index);
  }
  return {cumulate(rt.times(), inc), PathKind::Unadjusted, cause, draw.replicate()};
}

/// Per-cause increments (k rows of m) of the multivariate adjusted paths.
/// A subject failing from cause c at u feeds
///   W_c += xi_{cci} sqrt((Y - dN)/Y) sqrt(n)/Y
///   W_j += sign(c - j) xi_{jci} sqrt(dN_j/Y) sqrt(n)/(Y sqrt 2)   (j != c)
///   W_c += sign(j - c) xi_{jci} sqrt(dN_j/Y) sqrt(n)/(Y sqrt 2)   (j != c)
inline std::vector<std::vector<double>> multivariate_increments(const RiskTable& rt, const MultiplierDraw& draw) {
  const int k = rt.k();
  detail::check_draw(rt, draw, k, "wild_bootstrap_multivariate");
  const double root_n = std::sqrt(static_cast<double>(rt.n()));
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::vector<std::vector<double>> inc(static_cast<std::size_t>(k), std::vector<double>(rt.size(), 0.0));
  for (const auto& e : rt.subject_events()) {
    const std::size_t l = e.time_index;
    const int c = e.cause;
    const double y = rt.at_risk(l);
    const double scale = root_n / y;
    inc[c - 1][l] += draw(c, c, e.subject) * std::sqrt((y - rt.total_jumps(l)) / y) * scale;
    for (int j = 1; j <= k; ++j) {
      if (j == c) continue;
      const double coef = draw(j, c, e.subject) * std::sqrt(rt.jumps(j, l) / y) * scale * inv_sqrt2;
      inc[j - 1][l] += detail::sign(c - j) * coef;
      inc[c - 1][l] += detail::sign(j - c) * coef;
    }
  }
  return inc;
}

/// Multivariate adjusted paths, one per cause. For k = 1 this coincides
/// with wild_bootstrap_univariate (no cross terms and dN = dN_1).
inline std::vector<BootstrapPath> wild_bootstrap_multivariate(const RiskTable& rt, const MultiplierDraw& draw) {
  const auto inc = multivariate_increments(rt, draw);
  std::vector<BootstrapPath> out;
  out.reserve(inc.size());
  for (std::size_t j = 0; j < inc.size(); ++j) {
    out.push_back({cumulate(rt.times(), inc[j]), PathKind::MultivariateAdjusted, static_cast<int>(j + 1),
                   draw.replicate()});
  }
  return out;
}

/// Optional-variation (co)variance estimators of the multivariate scheme.
class OptionalVariation {
 public:
  OptionalVariation() = default;
  OptionalVariation(int k, std::vector<StepCurve> curves) : k_(k), curves_(std::move(curves)) {}

  int k() const { return k_; }
  const StepCurve& variance(int j) const { return at(j, j); }
  const StepCurve& covariance(int j, int l) const { return at(j, l); }

 private:
  const StepCurve& at(int j, int l) const {
    return curves_[static_cast<std::size_t>(j - 1) * static_cast<std::size_t>(k_) + static_cast<std::size_t>(l - 1)];
  }
  int k_ = 0;
  std::vector<StepCurve> curves_;
};

namespace detail {

// k x k increments of the optional-variation measures; entry (j,l) row-major.
inline std::vector<std::vector<double>> optional_variation_increments(const RiskTable& rt, const MultiplierDraw& draw,
                                                                      VariationForm form) {
  const int k = rt.k();
  check_draw(rt, draw, k, "optional_variation_estimators");
  const double n = static_cast<double>(rt.n());
  const auto kk = static_cast<std::size_t>(k);
  std::vector<std::vector<double>> inc(kk * kk, std::vector<double>(rt.size(), 0.0));
  for (const auto& e : rt.subject_events()) {
    const std::size_t l = e.time_index;
    const int c = e.cause;
    const double y = rt.at_risk(l);
    const double y3 = y * y * y;
    const double first_jumps = form == VariationForm::AllCause ? rt.total_jumps(l) : rt.jumps(c, l);
    const double xc = draw(c, c, e.subject);
    inc[(c - 1) * kk + (c - 1)][l] += n * xc * xc * (y - first_jumps) / y3;
    for (int j = 1; j <= k; ++j) {
      if (j == c) continue;
      const double x = draw(j, c, e.subject);
      const double term = 0.5 * n * x * x * rt.jumps(j, l) / y3;
      inc[(j - 1) * kk + (j - 1)][l] += term;
      inc[(c - 1) * kk + (c - 1)][l] += term;
      inc[(j - 1) * kk + (c - 1)][l] -= term;
      inc[(c - 1) * kk + (j - 1)][l] -= term;
    }
  }
  return inc;
}

}  // namespace detail

inline OptionalVariation optional_variation_estimators(const RiskTable& rt, const MultiplierDraw& draw,
                                                       VariationForm form = VariationForm::AllCause) {
  const auto inc = detail::optional_variation_increments(rt, draw, form);
  std::vector<StepCurve> curves;
  curves.reserve(inc.size());
  for (const auto& row : inc) curves.push_back(cumulate(rt.times(), row));
  return OptionalVariation(rt.k(), std::move(curves));
}

/// Precomputed two-risk Aalen-Johansen bootstrap for one primary cause.
/// Computes, per replicate and in O(events + m), the path W_F1 on the event
/// grid and the diagonal of its bootstrap variance estimator.
///
/// Path: W_F1(t) = G(t) - F1(t) H(t) with prefix sums over u <= t of
///   G = sum (alpha dW1 + beta dW2) / (1 - dA),  H = sum (dW1 + dW2) / (1 - dA),
/// alpha = 1 - F2(u), beta = F1(u) read at the jump (or at u- under
/// JumpConvention::BeforeJump). Integration stops before the first time with
/// dA = 1. Scheme::Unadjusted reproduces the continuous-data resampling:
/// integrands read F at the jump and drop the 1 / (1 - dA) factor.
class AalenJohansenBootstrap {
 public:
  AalenJohansenBootstrap(const RiskTable& rt, int primary, Scheme scheme,
                         VariationForm form = VariationForm::AllCause,
                         JumpConvention conv = JumpConvention::AtJump)
      : two_(collapse_to_two_risks(rt, primary)), scheme_(scheme), form_(form) {
    const bool adjusted = scheme == Scheme::Adjusted;
    const auto ing = cif_ingredients(two_, adjusted ? conv : JumpConvention::AtJump);
    const std::size_t m = two_.size();
    cif1_ = ing.cif1;
    cutoff_ = m;
    for (std::size_t l = 0; l < m; ++l) {
      if (ing.hazard_jump[l] >= 1.0) {
        cutoff_ = l;
        break;
      }
    }
    alpha_.resize(m);
    beta_.resize(m);
    inv_den_.resize(m);
    for (std::size_t l = 0; l < m; ++l) {
      alpha_[l] = 1.0 - ing.ref2[l];
      beta_[l] = ing.ref1[l];
      if (l >= cutoff_) inv_den_[l] = 0.0;
      else inv_den_[l] = adjusted ? 1.0 / (1.0 - ing.hazard_jump[l]) : 1.0;
    }
    build_subject_terms();
    g_.assign(m, 0.0);
    h_.assign(m, 0.0);
    p0_.assign(m, 0.0);
    p1_.assign(m, 0.0);
    p2_.assign(m, 0.0);
  }

  const RiskTable& two_risk_table() const { return two_; }
  const std::vector<double>& cif() const { return cif1_; }
  std::size_t cutoff_index() const { return cutoff_; }
  Scheme scheme() const { return scheme_; }

  /// W_F1 at every grid time into `out` (resized to m).
  void path(const MultiplierDraw& draw, std::vector<double>& out) {
    check(draw);
    const std::size_t m = two_.size();
    std::fill(g_.begin(), g_.end(), 0.0);
    std::fill(h_.begin(), h_.end(), 0.0);
    for (const auto& s : terms_) {
      const double own = draw(s.cause, s.cause, s.subject);
      g_[s.l] += own * s.g_own;
      h_[s.l] += own * s.h_own;
      if (s.g_cross != 0.0) g_[s.l] += draw(s.other, s.cause, s.subject) * s.g_cross;
    }
    out.resize(m);
    long double g = 0.0L, h = 0.0L;
    for (std::size_t l = 0; l < m; ++l) {
      g += g_[l];
      h += h_[l];
      out[l] = static_cast<double>(g - static_cast<long double>(cif1_[l]) * h);
    }
  }

  /// Diagonal of the bootstrap variance estimator at every grid time.
  void variance_diagonal(const MultiplierDraw& draw, std::vector<double>& out) {
    check(draw);
    const std::size_t m = two_.size();
    std::fill(p0_.begin(), p0_.end(), 0.0);
    std::fill(p1_.begin(), p1_.end(), 0.0);
    std::fill(p2_.begin(), p2_.end(), 0.0);
    for (const auto& s : terms_) {
      const double own = draw(s.cause, s.cause, s.subject);
      const double x = own * own * s.v_own;
      const double w = inv_den_[s.l] * inv_den_[s.l];
      const double lead = s.cause == 1 ? alpha_[s.l] : beta_[s.l];
      p0_[s.l] += w * lead * lead * x;
      p1_[s.l] += w * lead * x;
      p2_[s.l] += w * x;
      if (s.v_cross != 0.0) {
        const double c = draw(s.other, s.cause, s.subject);
        const double diff = alpha_[s.l] - beta_[s.l];
        p0_[s.l] += w * diff * diff * c * c * s.v_cross;
      }
    }
    out.resize(m);
    long double a0 = 0.0L, a1 = 0.0L, a2 = 0.0L;
    for (std::size_t l = 0; l < m; ++l) {
      a0 += p0_[l];
      a1 += p1_[l];
      a2 += p2_[l];
      const long double f = cif1_[l];
      const long double v = a0 - 2.0L * f * a1 + f * f * a2;
      out[l] = v > 0.0L ? static_cast<double>(v) : 0.0;
    }
  }

 private:
  struct SubjectTerm {
    std::size_t subject;
    std::size_t l;
    int cause;
    int other;
    double g_own, h_own, g_cross;  // path coefficients
    double v_own, v_cross;         // variance coefficients (on xi^2)
  };

  void check(const MultiplierDraw& draw) const {
    if (draw.n() != two_.n()) throw std::invalid_argument("AalenJohansenBootstrap: draw has wrong subject count");
    if (draw.k() < 2) throw std::invalid_argument("AalenJohansenBootstrap: draw needs at least 2 risks");
  }

  void build_subject_terms() {
    const double n = static_cast<double>(two_.n());
    const double root_n = std::sqrt(n);
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    for (const auto& e : two_.subject_events()) {
      const std::size_t l = e.time_index;
      if (l >= cutoff_) continue;
      const int c = e.cause;
      const int o = 3 - c;
      const double y = two_.at_risk(l);
      const double lead = c == 1 ? alpha_[l] : beta_[l];
      const double w = inv_den_[l];
      SubjectTerm s{e.subject, l, c, o, 0.0, 0.0, 0.0, 0.0, 0.0};
      if (scheme_ == Scheme::Adjusted) {
        const double a = root_n * std::sqrt((y - two_.total_jumps(l)) / y) / y;
        const double b = root_n * std::sqrt(two_.jumps(o, l) / y) / y * inv_sqrt2;
        s.g_own = w * lead * a;
        s.h_own = w * a;
        // xi_{oci} enters W_c with sign(o - c) and W_o with sign(c - o); the
        // H contributions cancel and G keeps (alpha - beta) with the sign of W_1.
        s.g_cross = w * (alpha_[l] - beta_[l]) * b;
        const double y3 = y * y * y;
        const double first = form_ == VariationForm::AllCause ? two_.total_jumps(l) : two_.jumps(c, l);
        s.v_own = n * (y - first) / y3;
        s.v_cross = 0.5 * n * two_.jumps(o, l) / y3;
      } else {
        const double a = root_n / y;
        s.g_own = w * lead * a;
        s.h_own = w * a;
        s.v_own = n / (y * y);
      }
      terms_.push_back(s);
    }
  }

  RiskTable two_;
  Scheme scheme_;
  VariationForm form_;
  std::vector<double> cif1_, alpha_, beta_, inv_den_;
  std::size_t cutoff_ = 0;
  std::vector<SubjectTerm> terms_;
  std::vector<double> g_, h_, p0_, p1_, p2_;
};

/// Bootstrap path of sqrt(n)(F1_hat - F1) for `primary`, built from the
/// two-risk multivariate paths (or the classical ones for Scheme::Unadjusted).
inline BootstrapPath wild_bootstrap_aalen_johansen(const RiskTable& rt, int primary, const MultiplierDraw& draw,
                                                   Scheme scheme = Scheme::Adjusted) {
  detail::check_cause(rt, primary, "wild_bootstrap_aalen_johansen");
  AalenJohansenBootstrap engine(rt, primary, scheme);
  std::vector<double> values;
  engine.path(draw, values);
  return {StepCurve(rt.times(), std::move(values), 0.0), PathKind::AalenJohansen, primary, draw.replicate()};
}

/// Plug-in Aalen-Johansen covariance with the optional-variation measures of
/// one bootstrap draw in place of the Greenwood ones.
inline CifVariance bootstrap_cif_variance(const RiskTable& rt, int primary, const MultiplierDraw& draw,
                                          Scheme scheme = Scheme::Adjusted,
                                          VariationForm form = VariationForm::AllCause,
                                          JumpConvention conv = JumpConvention::AtJump) {
  detail::check_cause(rt, primary, "bootstrap_cif_variance");
  const RiskTable two = collapse_to_two_risks(rt, primary);
  if (draw.n() != two.n() || draw.k() < 2)
    throw std::invalid_argument("bootstrap_cif_variance: draw must cover 2 risks and every subject");
  CifIngredients ing = cif_ingredients(two, scheme == Scheme::Adjusted ? conv : JumpConvention::AtJump);
  ing.jump_weight = scheme == Scheme::Adjusted;
  if (scheme == Scheme::Adjusted) {
    // Top-left 2x2 block of the draw.
    MultiplierDraw block(2, two.n(), draw.law(), draw.root_seed(), draw.replicate());
    for (int j = 1; j <= 2; ++j)
      for (int l = 1; l <= 2; ++l)
        for (std::size_t i = 0; i < two.n(); ++i) block.at(j, l, i) = draw(j, l, i);
    const auto inc = detail::optional_variation_increments(two, block, form);
    ing.d11 = inc[0];
    ing.d12 = inc[1];
    ing.d21 = inc[2];
    ing.d22 = inc[3];
  } else {
    const double n = static_cast<double>(two.n());
    for (const auto& e : two.subject_events()) {
      const double y = two.at_risk(e.time_index);
      const double x = draw(e.cause, e.cause, e.subject);
      auto& d = e.cause == 1 ? ing.d11 : ing.d22;
      d[e.time_index] += n * x * x / (y * y);
    }
  }
  return CifVariance(std::move(ing));
}

}  // namespace crboot
