#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "crboot/resampling.hpp"
#include "oracles.hpp"

using namespace crboot;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

bool close(long double expected, double actual, double rel = 1e-12) {
  const long double diff = std::fabs(expected - static_cast<long double>(actual));
  return diff <= rel * std::max<long double>(std::fabs(expected), 1e-300L);
}

bool close_abs(long double expected, double actual, double scale, double rel = 1e-12) {
  return std::fabs(expected - static_cast<long double>(actual)) <= rel * std::max(scale, 1e-300);
}

std::vector<Observation> random_obs(std::mt19937_64& eng, std::size_t n, int k, int max_time) {
  std::uniform_int_distribution<int> time(0, max_time), cause(0, k);
  std::vector<Observation> obs(n);
  for (auto& o : obs) o = {static_cast<double>(time(eng)), cause(eng)};
  return obs;
}

MultiplierDraw normal_draw(std::mt19937_64& eng, int k, std::size_t n) {
  std::normal_distribution<double> z;
  std::vector<double> v(static_cast<std::size_t>(k * k) * n);
  for (auto& x : v) x = z(eng);
  return MultiplierDraw::from_values(k, n, std::move(v));
}

oracle::Xi lookup(const MultiplierDraw& d) {
  return [&d](int j, int l, std::size_t i) { return d(j, l, i); };
}

// Visits every unit-vector draw e_(j,l,i); the conditional second moments of
// a path linear in the multipliers are sums of products over these.
template <class F>
void for_each_unit_draw(int k, std::size_t n, F&& f) {
  MultiplierDraw d(k, n, MultiplierLaw::StandardNormal, 0, 0);
  for (int j = 1; j <= k; ++j)
    for (int l = 1; l <= k; ++l)
      for (std::size_t i = 0; i < n; ++i) {
        d.at(j, l, i) = 1.0;
        f(d);
        d.at(j, l, i) = 0.0;
      }
}

}  // namespace

TEST_CASE("normal and centred Poisson multipliers have unit moments", "[resampling]") {
  const RiskTable rt = build_risk_table(Cohort({{1, 1}, {2, 0}}, 1));
  for (auto law : {MultiplierLaw::StandardNormal, MultiplierLaw::CenteredPoisson}) {
    const std::size_t draws = 100000;
    long double s = 0, s2 = 0, s4 = 0;
    for (std::size_t r = 0; r < draws / 2; ++r) {
      const MultiplierDraw d = draw_multipliers(rt, law, 99, r);
      for (double x : d.values()) {
        s += x;
        s2 += x * x;
        s4 += x * x * x * x;
      }
    }
    const long double mean = s / draws;
    const long double var = s2 / draws - mean * mean;
    const long double var_se = std::sqrt((s4 / draws - var * var) / draws);
    REQUIRE(std::fabs(mean) < 3.0 / std::sqrt(static_cast<double>(draws)));
    REQUIRE(std::fabs(var - 1.0L) < 3.0L * var_se);
  }
}

TEST_CASE("weird multipliers follow Bin(Y, 1/Y) - 1", "[resampling]") {
  // subject 0 exits with 1 at risk, subject 1 with m = 8 at risk
  std::vector<Observation> obs;
  for (int i = 0; i < 7; ++i) obs.push_back({5.0 + i, 0});
  obs.push_back({1, 1});
  obs.push_back({20, 1});
  const RiskTable rt = build_risk_table(Cohort(obs, 1));
  REQUIRE(rt.exit_at_risk(8) == 1);
  REQUIRE(rt.exit_at_risk(0) == 8);
  const double m = 8;
  const std::size_t draws = 100000;
  long double s = 0, s2 = 0;
  for (std::size_t r = 0; r < draws; ++r) {
    const MultiplierDraw d = draw_multipliers(rt, MultiplierLaw::Weird, 3, r);
    REQUIRE(d(1, 1, 8) == 0.0);
    s += d(1, 1, 0);
    s2 += d(1, 1, 0) * d(1, 1, 0);
  }
  const long double mean = s / draws;
  const long double var = s2 / draws - mean * mean;
  const double expect = 1.0 - 1.0 / m;
  // binomial fourth central moment for the SE of the variance
  const double p = 1.0 / m;
  const double mu4 = m * p * (1 - p) * (1 + 3 * (m - 2) * p * (1 - p));
  const double se = std::sqrt((mu4 - expect * expect) / draws);
  REQUIRE(std::fabs(static_cast<double>(var) - expect) < 3.0 * se);
  REQUIRE(std::fabs(static_cast<double>(mean)) < 3.0 * std::sqrt(expect / draws));
}

TEST_CASE("multiplier draws are a pure function of seed and replicate", "[resampling]") {
  const RiskTable rt = build_risk_table(Cohort({{1, 1}, {1, 2}, {2, 1}, {3, 0}}, 2));
  for (auto law : {MultiplierLaw::StandardNormal, MultiplierLaw::CenteredPoisson, MultiplierLaw::Weird}) {
    const MultiplierDraw a = draw_multipliers(rt, law, 42, 7);
    const MultiplierDraw b = draw_multipliers(rt, law, 42, 7);
    const MultiplierDraw c = draw_multipliers(rt, law, 42, 8);
    REQUIRE(a.values() == b.values());
    REQUIRE(a.values().size() == 4u * rt.n());
    if (law != MultiplierLaw::Weird) REQUIRE(a.values() != c.values());
    MultiplierDraw reused(2, rt.n(), law, 0, 0);
    fill_multipliers(reused, rt, law, 42, 8);
    fill_multipliers(reused, rt, law, 42, 7);
    REQUIRE(reused.values() == a.values());
  }
}

TEST_CASE("univariate adjusted path on the toy cohort", "[resampling]") {
  const RiskTable rt = build_risk_table(Cohort({{1, 1}, {1, 2}, {2, 1}}, 2));
  const auto path = wild_bootstrap_univariate(rt, 1, MultiplierDraw::constant(2, 3, 1.0));
  REQUIRE_THAT(path.curve(2), WithinRel(std::sqrt(3.0) * std::sqrt(2.0 / 3) / 3, 1e-15));
  REQUIRE(path.curve.initial() == 0.0);
  REQUIRE(path.curve.grid() == rt.times());
}

TEST_CASE("zero multipliers give zero paths everywhere", "[resampling]") {
  std::mt19937_64 eng(2);
  const auto obs = random_obs(eng, 20, 3, 5);
  const RiskTable rt = build_risk_table(Cohort(obs, 3));
  const MultiplierDraw zero = MultiplierDraw::constant(3, rt.n(), 0.0);
  const auto all_zero = [](const StepCurve& c) {
    return std::all_of(c.values().begin(), c.values().end(), [](double v) { return v == 0.0; });
  };
  REQUIRE(all_zero(wild_bootstrap_univariate(rt, 1, zero).curve));
  REQUIRE(all_zero(wild_bootstrap_unadjusted(rt, 2, zero).curve));
  for (const auto& p : wild_bootstrap_multivariate(rt, zero)) REQUIRE(all_zero(p.curve));
  REQUIRE(all_zero(wild_bootstrap_aalen_johansen(rt, 1, zero).curve));
  const OptionalVariation ov = optional_variation_estimators(rt, zero);
  for (int j = 1; j <= 3; ++j)
    for (int l = 1; l <= 3; ++l)
      for (double v : ov.covariance(j, l).values()) REQUIRE(v == 0.0);
  REQUIRE(all_zero(bootstrap_cif_variance(rt, 1, zero).diagonal()));
}

TEST_CASE("multivariate scheme with one risk equals the univariate one", "[resampling]") {
  std::mt19937_64 eng(3);
  for (int rep = 0; rep < 30; ++rep) {
    const auto obs = random_obs(eng, 5 + rep, 1, 4);
    const RiskTable rt = build_risk_table(Cohort(obs, 1));
    const MultiplierDraw d = normal_draw(eng, 1, rt.n());
    const auto multi = wild_bootstrap_multivariate(rt, d);
    const auto uni = wild_bootstrap_univariate(rt, 1, d);
    REQUIRE(multi.size() == 1);
    for (std::size_t l = 0; l < rt.size(); ++l)
      REQUIRE_THAT(multi[0].curve.value_at(l), WithinAbs(uni.curve.value_at(l), 1e-14));
  }
}

TEST_CASE("without ties the adjusted path scales each term by sqrt((Y-1)/Y)", "[resampling]") {
  const RiskTable rt = build_risk_table(Cohort({{1, 1}, {2, 1}, {3, 1}, {4, 0}, {5, 0}}, 1));
  std::mt19937_64 eng(4);
  const MultiplierDraw d = normal_draw(eng, 1, rt.n());
  const auto adj = wild_bootstrap_univariate(rt, 1, d);
  const auto old = wild_bootstrap_unadjusted(rt, 1, d);
  for (std::size_t l = 0; l < rt.size(); ++l) {
    const double y = rt.at_risk(l);
    const double da = adj.curve.value_at(l) - adj.curve.before(l);
    const double dold = old.curve.value_at(l) - old.curve.before(l);
    REQUIRE_THAT(da, WithinAbs(dold * std::sqrt((y - 1) / y), 1e-14));
  }
}

TEST_CASE("multivariate paths match the display evaluated directly", "[resampling]") {
  std::mt19937_64 eng(5);
  for (int rep = 0; rep < 40; ++rep) {
    const int k = 2 + rep % 2;
    const auto obs = random_obs(eng, 4 + rep % 20, k, 4);
    const RiskTable rt = build_risk_table(Cohort(obs, k));
    const MultiplierDraw d = normal_draw(eng, k, rt.n());
    const auto paths = wild_bootstrap_multivariate(rt, d);
    for (int j = 1; j <= k; ++j)
      for (double t : rt.times())
        REQUIRE_THAT(paths[j - 1].curve(t), WithinAbs(static_cast<double>(oracle::multivariate_path(obs, k, j, t, lookup(d))), 1e-12));
  }
}

TEST_CASE("conditional second moments collapse to the Greenwood estimators", "[resampling]") {
  std::mt19937_64 eng(6);
  for (int rep = 0; rep < 40; ++rep) {
    const int k = 1 + rep % 3;
    const auto obs = random_obs(eng, 2 + rep % 25, k, 5);
    const RiskTable rt = build_risk_table(Cohort(obs, k));
    const std::size_t m = rt.size();
    const auto kk = static_cast<std::size_t>(k);
    std::vector<long double> second(kk * kk * m, 0.0L), uni(kk * m, 0.0L), old(kk * m, 0.0L);
    for_each_unit_draw(k, rt.n(), [&](const MultiplierDraw& d) {
      const auto paths = wild_bootstrap_multivariate(rt, d);
      for (std::size_t a = 0; a < kk; ++a)
        for (std::size_t b = 0; b < kk; ++b)
          for (std::size_t l = 0; l < m; ++l)
            second[(a * kk + b) * m + l] += static_cast<long double>(paths[a].curve.value_at(l)) * paths[b].curve.value_at(l);
      for (int j = 1; j <= k; ++j) {
        const auto u = wild_bootstrap_univariate(rt, j, d);
        const auto o = wild_bootstrap_unadjusted(rt, j, d);
        for (std::size_t l = 0; l < m; ++l) {
          uni[(j - 1) * m + l] += static_cast<long double>(u.curve.value_at(l)) * u.curve.value_at(l);
          old[(j - 1) * m + l] += static_cast<long double>(o.curve.value_at(l)) * o.curve.value_at(l);
        }
      }
    });
    for (int j = 1; j <= k; ++j) {
      const StepCurve gw = greenwood_variance(rt, j), un = unadjusted_variance(rt, j);
      for (std::size_t l = 0; l < m; ++l) {
        const std::size_t a = static_cast<std::size_t>(j - 1);
        REQUIRE(close(second[(a * kk + a) * m + l], gw.value_at(l)));
        REQUIRE(close(uni[a * m + l], gw.value_at(l)));
        REQUIRE(close(old[a * m + l], un.value_at(l)));
      }
      for (int j2 = 1; j2 <= k; ++j2) {
        if (j2 == j) continue;
        const StepCurve cov = greenwood_covariance(rt, j, j2);
        const std::size_t a = static_cast<std::size_t>(j - 1), b = static_cast<std::size_t>(j2 - 1);
        for (std::size_t l = 0; l < m; ++l) REQUIRE(close_abs(second[(a * kk + b) * m + l], cov.value_at(l), greenwood_variance(rt, j).value_at(l) + std::fabs(cov.value_at(l))));
      }
    }
  }
}

TEST_CASE("paths are linear in the multipliers", "[resampling]") {
  std::mt19937_64 eng(7);
  const auto obs = random_obs(eng, 25, 2, 5);
  const RiskTable rt = build_risk_table(Cohort(obs, 2));
  const MultiplierDraw d = normal_draw(eng, 2, rt.n());
  std::vector<double> scaled = d.values();
  for (auto& x : scaled) x *= 4.0;
  const MultiplierDraw d4 = MultiplierDraw::from_values(2, rt.n(), scaled);
  const auto a = wild_bootstrap_multivariate(rt, d), b = wild_bootstrap_multivariate(rt, d4);
  for (int j = 0; j < 2; ++j)
    for (std::size_t l = 0; l < rt.size(); ++l) REQUIRE(b[j].curve.value_at(l) == 4.0 * a[j].curve.value_at(l));
  const auto fa = wild_bootstrap_aalen_johansen(rt, 1, d), fb = wild_bootstrap_aalen_johansen(rt, 1, d4);
  for (std::size_t l = 0; l < rt.size(); ++l)
    REQUIRE_THAT(fb.curve.value_at(l), WithinAbs(4.0 * fa.curve.value_at(l), 1e-13));
}

TEST_CASE("Aalen-Johansen path matches the display evaluated directly", "[resampling]") {
  std::mt19937_64 eng(8);
  for (int rep = 0; rep < 40; ++rep) {
    const int k = 2 + rep % 2;
    const auto obs = random_obs(eng, 4 + rep % 20, k, 5);
    const RiskTable rt = build_risk_table(Cohort(obs, k));
    const int primary = 1 + rep % k;
    const auto two = oracle::collapse(obs, primary);
    const MultiplierDraw d = normal_draw(eng, k, rt.n());
    for (auto conv : {JumpConvention::AtJump, JumpConvention::BeforeJump}) {
      AalenJohansenBootstrap engine(rt, primary, Scheme::Adjusted, VariationForm::AllCause, conv);
      std::vector<double> path;
      engine.path(d, path);
      for (std::size_t l = 0; l < rt.size(); ++l) {
        const long double expect = oracle::aalen_johansen_path(two, rt.time(l), lookup(d), conv == JumpConvention::AtJump);
        REQUIRE_THAT(path[l], WithinAbs(static_cast<double>(expect), 1e-12));
      }
    }
    const auto p = wild_bootstrap_aalen_johansen(rt, primary, d);
    for (std::size_t l = 0; l < rt.size(); ++l)
      REQUIRE_THAT(p.curve.value_at(l), WithinAbs(static_cast<double>(oracle::aalen_johansen_path(two, rt.time(l), lookup(d))), 1e-12));
  }
}

TEST_CASE("single cause-1 event: Aalen-Johansen path", "[resampling]") {
  for (int n : {2, 5, 30}) {
    std::vector<Observation> obs{{1, 1}};
    for (int i = 1; i < n; ++i) obs.push_back({3.0, 0});
    const RiskTable rt = build_risk_table(Cohort(obs, 2));
    std::mt19937_64 eng(n);
    const MultiplierDraw d = normal_draw(eng, 2, rt.n());
    const double nn = n;
    const double dw1 = d(1, 1, 0) * std::sqrt(nn) * std::sqrt((nn - 1) / nn) / nn;
    const double f1 = 1.0 / nn;
    const auto p = wild_bootstrap_aalen_johansen(rt, 1, d);
    REQUIRE_THAT(p.curve(2), WithinAbs((1 - f1) / (1 - 1.0 / nn) * dw1, 1e-14));
  }
}

TEST_CASE("Aalen-Johansen conditional variance equals the plug-in exactly", "[resampling]") {
  std::mt19937_64 eng(9);
  for (int rep = 0; rep < 40; ++rep) {
    const int k = 2 + rep % 2;
    const auto obs = random_obs(eng, 3 + rep % 25, k, 4);
    const RiskTable rt = build_risk_table(Cohort(obs, k));
    const std::size_t m = rt.size();
    for (auto scheme : {Scheme::Adjusted, Scheme::Unadjusted}) {
      AalenJohansenBootstrap engine(rt, 1, scheme);
      std::vector<long double> second(m, 0.0L);
      std::vector<double> path;
      for_each_unit_draw(2, rt.n(), [&](const MultiplierDraw& d) {
        engine.path(d, path);
        for (std::size_t l = 0; l < m; ++l) second[l] += static_cast<long double>(path[l]) * path[l];
      });
      const CifVariance cv = scheme == Scheme::Adjusted ? cif_covariance(rt, 1) : cif_covariance_unadjusted(rt, 1);
      for (std::size_t l = 0; l < m; ++l) {
        const double scale = std::max(cv.diagonal().value_at(l), 1e-14);
        REQUIRE(close_abs(second[l], cv.diagonal().value_at(l), scale, 1e-10));
      }
    }
  }
}

TEST_CASE("engine variance diagonal equals the bootstrap plug-in", "[resampling]") {
  std::mt19937_64 eng(10);
  for (int rep = 0; rep < 40; ++rep) {
    const int k = 2 + rep % 2;
    const auto obs = random_obs(eng, 3 + rep % 25, k, 4);
    const RiskTable rt = build_risk_table(Cohort(obs, k));
    const MultiplierDraw d = draw_multipliers(rt, MultiplierLaw::CenteredPoisson, 5, rep, 2, rt.n());
    for (auto scheme : {Scheme::Adjusted, Scheme::Unadjusted}) {
      for (auto form : {VariationForm::AllCause, VariationForm::CauseSpecific}) {
        AalenJohansenBootstrap engine(rt, 1, scheme, form);
        std::vector<double> diag;
        engine.variance_diagonal(d, diag);
        const CifVariance bv = bootstrap_cif_variance(rt, 1, d, scheme, form);
        for (std::size_t l = 0; l < rt.size(); ++l)
          REQUIRE_THAT(diag[l], WithinAbs(bv.diagonal().value_at(l), 1e-12 * std::max(1.0, bv.diagonal().value_at(l))));
      }
    }
  }
}

TEST_CASE("unit squared multipliers reproduce the Greenwood measures", "[resampling]") {
  std::mt19937_64 eng(11);
  for (int rep = 0; rep < 40; ++rep) {
    const int k = 2 + rep % 2;
    const auto obs = random_obs(eng, 3 + rep % 25, k, 4);
    const RiskTable rt = build_risk_table(Cohort(obs, k));
    // xi = +-1 so that xi^2 = 1
    std::vector<double> v(static_cast<std::size_t>(k * k) * rt.n());
    std::bernoulli_distribution coin;
    for (auto& x : v) x = coin(eng) ? 1.0 : -1.0;
    const MultiplierDraw d = MultiplierDraw::from_values(k, rt.n(), v);
    const OptionalVariation all = optional_variation_estimators(rt, d);
    const OptionalVariation cs = optional_variation_estimators(rt, d, VariationForm::CauseSpecific);
    for (int j = 1; j <= k; ++j) {
      const StepCurve gw = greenwood_variance(rt, j);
      for (std::size_t l = 0; l < rt.size(); ++l) {
        REQUIRE_THAT(all.variance(j).value_at(l), WithinAbs(gw.value_at(l), 1e-12 * std::max(1.0, gw.value_at(l))));
        long double extra = 0;
        for (std::size_t u = 0; u <= l; ++u)
          for (int o = 1; o <= k; ++o)
            if (o != j) extra += static_cast<long double>(rt.n()) * rt.jumps(j, u) * rt.jumps(o, u) / std::pow(static_cast<long double>(rt.at_risk(u)), 3);
        REQUIRE_THAT(cs.variance(j).value_at(l), WithinAbs(static_cast<double>(gw.value_at(l) + extra), 1e-12 * std::max(1.0, gw.value_at(l))));
      }
      for (int o = 1; o <= k; ++o) {
        if (o == j) continue;
        const StepCurve cov = greenwood_covariance(rt, j, o);
        for (std::size_t l = 0; l < rt.size(); ++l)
          REQUIRE_THAT(all.covariance(j, o).value_at(l), WithinAbs(cov.value_at(l), 1e-12 * std::max(1.0, -cov.value_at(l))));
      }
    }
    // the same substitution turns the bootstrap CIF variance into the plug-in
    const CifVariance bv = bootstrap_cif_variance(rt, 1, d);
    const CifVariance cv = cif_covariance(rt, 1);
    for (std::size_t l = 0; l < rt.size(); ++l)
      REQUIRE_THAT(bv.diagonal().value_at(l), WithinAbs(cv.diagonal().value_at(l), 1e-12 * std::max(1.0, cv.diagonal().value_at(l))));
  }
}

TEST_CASE("optional variation estimators average to the Greenwood ones", "[resampling]") {
  std::mt19937_64 eng(12);
  const auto obs = random_obs(eng, 60, 2, 6);
  const RiskTable rt = build_risk_table(Cohort(obs, 2));
  const std::size_t reps = 10000;
  const std::size_t last = rt.size() - 1;
  long double v1 = 0, c12 = 0, f = 0;
  MultiplierDraw d(2, rt.n(), MultiplierLaw::CenteredPoisson, 0, 0);
  for (std::size_t r = 0; r < reps; ++r) {
    fill_multipliers(d, rt, MultiplierLaw::CenteredPoisson, 77, r);
    const OptionalVariation ov = optional_variation_estimators(rt, d);
    v1 += ov.variance(1).value_at(last);
    c12 += ov.covariance(1, 2).value_at(last);
    f += bootstrap_cif_variance(rt, 1, d).diagonal().value_at(last);
  }
  REQUIRE_THAT(static_cast<double>(v1 / reps), WithinRel(greenwood_variance(rt, 1).value_at(last), 0.02));
  REQUIRE_THAT(static_cast<double>(c12 / reps), WithinRel(greenwood_covariance(rt, 1, 2).value_at(last), 0.03));
  REQUIRE_THAT(static_cast<double>(f / reps), WithinRel(cif_covariance(rt, 1).diagonal().value_at(last), 0.03));
}

TEST_CASE("replicate path dumps are reproducible", "[resampling]") {
  const RiskTable rt = build_risk_table(Cohort({{1, 1}, {1, 2}, {2, 1}, {3, 0}}, 2));
  const auto a = wild_bootstrap_aalen_johansen(rt, 1, draw_multipliers(rt, MultiplierLaw::StandardNormal, 1, 3));
  const auto b = wild_bootstrap_aalen_johansen(rt, 1, draw_multipliers(rt, MultiplierLaw::StandardNormal, 1, 3));
  REQUIRE(a.curve.values() == b.curve.values());
  REQUIRE(a.replicate == 3);
}
