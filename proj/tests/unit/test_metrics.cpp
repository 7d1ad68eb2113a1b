#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "hearth/metrics.hpp"
#include "hearth/rng.hpp"
#include "hearth/simulator.hpp"

using namespace hearth;
namespace mt = hearth::metrics;

namespace {

mt::CohortStats cohort(std::size_t served, std::size_t satisfied) {
  mt::CohortStats c;
  c.served = served;
  c.satisfied = satisfied;
  return c;
}

double t_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  const double t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

// Average ranks of |d| for the non-zero differences.
std::vector<double> abs_ranks(const std::vector<double>& d) {
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto x, auto y) { return std::abs(d[x]) < std::abs(d[y]); });
  std::vector<double> r(d.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && std::abs(d[idx[j]]) == std::abs(d[idx[i]])) ++j;
    for (std::size_t k = i; k < j; ++k) r[idx[k]] = (static_cast<double>(i + j) + 1.0) / 2.0;
    i = j;
  }
  return r;
}

// Two-sided exact p by enumerating every sign pattern.
double wilcoxon_enumerated(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  const auto r = abs_ranks(d);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) w_plus += d[i] > 0 ? r[i] : 0.0;
  const std::size_t n = d.size();
  std::size_t lower = 0, upper = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) w += (mask >> i) & 1 ? r[i] : 0.0;
    lower += w <= w_plus + 1e-9 ? 1 : 0;
    upper += w >= w_plus - 1e-9 ? 1 : 0;
  }
  const double total = std::ldexp(1.0, static_cast<int>(n));
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / total);
}

}  // namespace

TEST_CASE("disparate impact examples") {
  CHECK(mt::disparate_impact({{Archetype::Child, cohort(10, 8)}, {Archetype::Elderly, cohort(10, 10)}}) ==
        doctest::Approx(0.8).epsilon(1e-15));
  CHECK(mt::disparate_impact({{Archetype::Child, cohort(4, 0)}, {Archetype::Elderly, cohort(5, 0)}}) == 1.0);
  CHECK(mt::disparate_impact({{Archetype::Child, cohort(4, 0)}, {Archetype::Elderly, cohort(5, 5)}}) == 0.0);
  CHECK_THROWS_AS(mt::disparate_impact({}), Error);
  try {
    mt::disparate_impact({{Archetype::Child, cohort(0, 0)}, {Archetype::Elderly, cohort(5, 5)}});
    FAIL("expected EmptyCohort");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyCohort);
  }
}

TEST_CASE("disparate impact lies in [0,1] and is scale-free") {
  Rng rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    mt::CohortOutcomes o;
    for (const auto a : all_values<Archetype>()) {
      const auto served = static_cast<std::size_t>(rng.between(1, 50));
      o[a] = cohort(served, rng.below(served + 1));
    }
    const double dir = mt::disparate_impact(o);
    CHECK(dir >= 0.0);
    CHECK(dir <= 1.0);
    auto doubled = o;
    for (auto& [a, c] : doubled) c = cohort(c.served * 2, c.satisfied * 2);
    CHECK(mt::disparate_impact(doubled) == doctest::Approx(dir).epsilon(1e-12));
  }
}

TEST_CASE("nearest-rank percentiles on 1..100") {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::reverse(v.begin(), v.end());
  CHECK(mt::percentile(v, 50) == 50.0);
  CHECK(mt::percentile(v, 95) == 95.0);
  CHECK(mt::percentile(v, 100) == 100.0);
  CHECK(mt::percentile(v, 0.5) == 1.0);
  CHECK(mt::percentile({7.0}, 50) == 7.0);
  CHECK_THROWS_AS(mt::percentile({}, 50), Error);
  CHECK_THROWS_AS(mt::percentile(v, 0), Error);
}

TEST_CASE("rates on a handmade log") {
  sim::SimulationLog log;
  sim::WindowRecord w;
  for (int i = 0; i < 14; ++i) {
    sim::DecisionOutcome o;
    o.served = true;
    o.satisfied = i != 0;
    o.violation = i == 0;
    o.decision.archetype = Archetype::TypicalAdult;
    o.decision.decision_latency_ms = 100.0 + i;
    w.decisions.push_back(o);
  }
  log.windows.push_back(w);
  const auto r = mt::rates(log);
  CHECK(r.decisions == 14);
  CHECK(r.safety_violation == doctest::Approx(1.0 / 14.0).epsilon(1e-15));
  CHECK(r.compliance == doctest::Approx(13.0 / 14.0).epsilon(1e-15));
  CHECK(r.answered == 1.0);
  CHECK(r.latency_p50_ms == 106.0);
  CHECK_THROWS_AS(mt::rates(sim::SimulationLog{}), Error);
}

TEST_CASE("cohort outcomes on the conflict suite cover every archetype") {
  const auto house = sim::default_household();
  const auto policy = sim::default_policy();
  const auto log = sim::run_trace(sim::fixture_trace("conflict_suite", house, policy), house, policy, {}, 42);
  const auto cohorts = mt::cohort_outcomes(log);
  CHECK(cohorts.size() == 4);
  std::size_t served = 0;
  for (const auto& [a, c] : cohorts) served += c.served;
  CHECK(served == log.decision_count());
  const auto csv = mt::comparison_csv(log, sim::run_multi_agent_baseline(sim::fixture_trace("conflict_suite", house,
                                                                                                 policy),
                                                                              house, policy,
                                                                              sim::default_assignment(), 42));
  CHECK(csv.rfind("metric,single_agent,multi_agent_baseline\n", 0) == 0);
  CHECK(csv.find("disparate_impact_ratio,") != std::string::npos);
}

TEST_CASE("student t tail matches boost") {
  for (const double df : {1.0, 2.0, 5.0, 17.0, 120.0}) {
    const boost::math::students_t dist(df);
    for (const double t : {0.0, 0.3, 1.0, 2.5, 7.0}) {
      const double expected = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
      CHECK(std::abs(mt::student_t_two_tailed(t, df) - expected) < 1e-10);
    }
  }
}

TEST_CASE("paired t-test matches an independent oracle on random samples") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(2, 40));
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.unit() * 10.0;
      b[i] = rng.unit() * 10.0 + 0.5;
    }
    const auto r = mt::paired_ttest(a, b);
    CHECK(std::abs(r.p_value - t_oracle(a, b)) < 1e-9);
    CHECK(r.n == n);
  }
  CHECK_THROWS_AS(mt::paired_ttest({1.0}, {2.0}), Error);
  CHECK_THROWS_AS(mt::paired_ttest({1.0, 2.0}, {1.0}), Error);
  CHECK_THROWS_AS(mt::paired_ttest({1.0, 2.0}, {0.0, 1.0}), Error);  // constant differences
}

TEST_CASE("wilcoxon exact p equals enumeration for small samples") {
  const auto five = mt::wilcoxon_signed({6, 7, 8, 9, 10}, {1, 1, 1, 1, 1});
  CHECK(five.exact);
  CHECK(five.statistic == 15.0);
  CHECK(five.p_value == doctest::Approx(0.0625).epsilon(1e-15));

  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(5, 12));
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = static_cast<double>(rng.between(0, 6));  // small range forces ties
      b[i] = static_cast<double>(rng.between(0, 6));
    }
    std::size_t nonzero = 0;
    for (std::size_t i = 0; i < n; ++i) nonzero += a[i] != b[i] ? 1 : 0;
    if (nonzero < 5) {
      CHECK_THROWS_AS(mt::wilcoxon_signed(a, b), Error);
      continue;
    }
    const auto r = mt::wilcoxon_signed(a, b);
    CHECK(r.exact);
    CHECK(std::abs(r.p_value - wilcoxon_enumerated(a, b)) < 1e-12);
  }
}

TEST_CASE("wilcoxon switches to the normal approximation above the exact limit") {
  Rng rng(30);
  std::vector<double> a(40), b(40);
  for (std::size_t i = 0; i < 40; ++i) {
    a[i] = static_cast<double>(rng.between(1, 9)) + 0.5;
    b[i] = static_cast<double>(rng.between(0, 8));
  }
  const auto r = mt::wilcoxon_signed(a, b);
  CHECK_FALSE(r.exact);
  // Recompute the tie-corrected z by hand.
  std::vector<double> d(40);
  for (std::size_t i = 0; i < 40; ++i) d[i] = a[i] - b[i];
  const auto ranks = abs_ranks(d);
  double w = 0.0;
  for (std::size_t i = 0; i < 40; ++i) w += d[i] > 0 ? ranks[i] : 0.0;
  std::map<double, int> ties;
  for (const double x : d) ++ties[std::abs(x)];
  double tie_term = 0.0;
  for (const auto& [v, t] : ties) tie_term += static_cast<double>(t) * (t * t - 1.0);
  const double n = 40.0;
  const double var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0;
  const double z = (w - n * (n + 1) / 4.0) / std::sqrt(var);
  const boost::math::normal norm;
  CHECK(r.p_value == doctest::Approx(2.0 * boost::math::cdf(boost::math::complement(norm, std::abs(z)))).epsilon(1e-12));
}

TEST_CASE("cohen kappa") {
  const std::vector<std::string> same{"a", "b", "a", "c", "b"};
  CHECK(mt::cohen_kappa(same, same).statistic == doctest::Approx(1.0).epsilon(1e-15));
  // po = 0.7, pe = 0.5*0.6 + 0.5*0.4 = 0.5 -> kappa 0.4
  const std::vector<std::string> a{"y", "y", "y", "y", "y", "n", "n", "n", "n", "n"};
  const std::vector<std::string> b{"y", "y", "y", "y", "n", "n", "n", "n", "y", "y"};
  const auto k = mt::cohen_kappa(a, b);
  CHECK(k.statistic == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(std::find(k.flags.begin(), k.flags.end(), "kappa_below_0.7") != k.flags.end());
  CHECK_THROWS_AS(mt::cohen_kappa({}, {}), Error);
  CHECK_THROWS_AS(mt::cohen_kappa({"a"}, {"a", "b"}), Error);
  try {
    mt::cohen_kappa({"a", "a"}, {"a", "a"});
    FAIL("expected DegenerateLabels");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::DegenerateLabels);
  }
}

TEST_CASE("stat results serialize with their method") {
  const auto r = mt::paired_ttest({1, 2, 3, 4}, {1.5, 2.1, 3.9, 4.0});
  const auto j = mt::to_json(r);
  CHECK(j["method"] == "paired_t");
  CHECK(j["n"] == 4);
}
