#include "hearth/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace hearth::metrics {

using nlohmann::json;

double CohortStats::satisfaction_rate() const {
  if (served == 0) throw Error(Errc::EmptyCohort, "cohort has no served requests");
  return static_cast<double>(satisfied) / static_cast<double>(served);
}

CohortOutcomes cohort_outcomes(const sim::SimulationLog& log) {
  CohortOutcomes out;
  for (const auto a : all_values<Archetype>()) out[a];
  for (const auto& w : log.windows) {
    for (const auto& o : w.decisions) {
      auto& c = out[o.decision.archetype];
      if (!o.served) continue;
      ++c.served;
      c.satisfied += o.satisfied ? 1 : 0;
      c.violations += o.violation ? 1 : 0;
      c.latencies_ms.push_back(o.decision.decision_latency_ms);
    }
  }
  return out;
}

double disparate_impact(const CohortOutcomes& outcomes) {
  if (outcomes.empty()) throw Error(Errc::EmptyCohort, "no cohorts");
  double lo = 1.0;
  double hi = 0.0;
  for (const auto& [archetype, c] : outcomes) {
    if (c.served == 0) throw Error(Errc::EmptyCohort, fmt::format("cohort {} has no served requests", to_string(archetype)));
    const double r = c.satisfaction_rate();
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  if (hi == 0.0) return 1.0;
  return lo / hi;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(Errc::Precondition, "percentile of an empty sample");
  if (!(p > 0.0 && p <= 100.0)) throw Error(Errc::Precondition, fmt::format("percentile {} outside (0,100]", p));
  std::sort(values.begin(), values.end());
  const auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  return values[std::clamp<std::size_t>(rank, 1, values.size()) - 1];
}

Rates rates(const sim::SimulationLog& log) {
  Rates r;
  std::vector<double> latencies;
  std::vector<double> wall;
  for (const auto& w : log.windows) {
    wall.push_back(w.wall_ms);
    r.conflicts += w.conflicts.size();
    for (const auto& o : w.decisions) {
      ++r.decisions;
      if (o.served) {
        ++r.served;
        r.satisfied += o.satisfied ? 1 : 0;
      }
      r.violating += o.violation ? 1 : 0;
      latencies.push_back(o.decision.decision_latency_ms);
    }
  }
  if (r.decisions == 0) throw Error(Errc::EmptyLog, "simulation log has no decisions");
  const auto n = static_cast<double>(r.decisions);
  r.compliance = r.served == 0 ? 0.0 : static_cast<double>(r.satisfied) / static_cast<double>(r.served);
  r.answered = static_cast<double>(r.served) / n;
  r.safety_violation = static_cast<double>(r.violating) / n;
  r.latency_p50_ms = percentile(latencies, 50);
  r.latency_p95_ms = percentile(latencies, 95);
  r.wall_p50_ms = percentile(wall, 50);
  return r;
}

json to_json(const Rates& r) {
  return {{"decisions", r.decisions},
          {"served", r.served},
          {"satisfied", r.satisfied},
          {"violating", r.violating},
          {"conflicts", r.conflicts},
          {"compliance", r.compliance},
          {"answered", r.answered},
          {"safety_violation", r.safety_violation},
          {"latency_p50_ms", r.latency_p50_ms},
          {"latency_p95_ms", r.latency_p95_ms},
          {"wall_p50_ms", r.wall_p50_ms}};
}

std::string_view to_string(StatMethod m) {
  switch (m) {
    case StatMethod::PairedT:
      return "paired_t";
    case StatMethod::WilcoxonSigned:
      return "wilcoxon_signed";
    case StatMethod::CohenKappa:
      break;
  }
  return "cohen_kappa";
}

json to_json(const StatResult& r) {
  return {{"method", to_string(r.method)}, {"statistic", r.statistic}, {"p_value", r.p_value},
          {"n", r.n},                      {"exact", r.exact},         {"flags", r.flags}};
}

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_cf(double a, double b, double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  double c = 1.0;
  double d = 1.0 - (a + b) * x / (a + 1.0);
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

std::vector<double> differences(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::DegenerateSample, fmt::format("paired samples differ in length ({} vs {})", a.size(), b.size()));
  }
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    d[i] = a[i] - b[i];
    if (!std::isfinite(d[i])) throw Error(Errc::DegenerateSample, "non-finite sample value");
  }
  return d;
}

double normal_two_tailed(double z) { return std::erfc(std::fabs(z) / std::sqrt(2.0)); }

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(Errc::Precondition, fmt::format("incomplete_beta({}, {}, {})", a, b, x));
  }
  if (x == 0.0 || x == 1.0) return x;
  const double front =
      std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_tailed(double t, double df) {
  if (!(df > 0.0)) throw Error(Errc::Precondition, "degrees of freedom must be positive");
  if (std::isnan(t)) throw Error(Errc::Precondition, "t is NaN");
  if (std::isinf(t)) return 0.0;
  return std::clamp(incomplete_beta(df / 2.0, 0.5, df / (df + t * t)), 0.0, 1.0);
}

StatResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b) {
  const auto d = differences(a, b);
  if (d.size() < 2) throw Error(Errc::DegenerateSample, "paired t-test needs at least 2 pairs");
  const auto n = static_cast<double>(d.size());
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / n;
  double ss = 0.0;
  for (const double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  if (!(sd > 0.0)) throw Error(Errc::DegenerateSample, "differences have zero variance");
  StatResult r;
  r.method = StatMethod::PairedT;
  r.n = d.size();
  r.statistic = mean / (sd / std::sqrt(n));
  r.p_value = student_t_two_tailed(r.statistic, n - 1.0);
  r.exact = true;
  return r;
}

StatResult wilcoxon_signed(const std::vector<double>& a, const std::vector<double>& b) {
  auto d = differences(a, b);
  std::erase_if(d, [](double x) { return x == 0.0; });
  if (d.size() < 5) {
    throw Error(Errc::DegenerateSample, fmt::format("{} non-zero differences, need at least 5", d.size()));
  }
  const std::size_t n = d.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return std::fabs(d[x]) < std::fabs(d[y]); });
  // Doubled average ranks keep tied ranks integral.
  std::vector<std::size_t> rank2(n);
  double tie_term = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && std::fabs(d[order[j + 1]]) == std::fabs(d[order[i]])) ++j;
    const std::size_t doubled = i + 1 + j + 1;  // 2 * mean of ranks i+1..j+1
    for (std::size_t k = i; k <= j; ++k) rank2[order[k]] = doubled;
    const auto t = static_cast<double>(j - i + 1);
    tie_term += t * t * t - t;
    i = j + 1;
  }
  std::size_t w2 = 0;
  std::size_t total2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (d[i] > 0.0) w2 += rank2[i];
  }
  StatResult r;
  r.method = StatMethod::WilcoxonSigned;
  r.n = n;
  r.statistic = static_cast<double>(w2) / 2.0;
  if (n <= kWilcoxonExactMax) {
    // counts[s] = number of sign assignments with doubled positive-rank sum s.
    std::vector<double> counts(total2 + 1, 0.0);
    counts[0] = 1.0;
    std::size_t reach = 0;
    for (const std::size_t rk : rank2) {
      for (std::size_t s = reach + 1; s-- > 0;) {
        if (counts[s] != 0.0) counts[s + rk] += counts[s];
      }
      reach += rk;
    }
    const double all = std::ldexp(1.0, static_cast<int>(n));
    double lower = 0.0;
    double upper = 0.0;
    for (std::size_t s = 0; s <= total2; ++s) {
      if (s <= w2) lower += counts[s];
      if (s >= w2) upper += counts[s];
    }
    r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / all);
    r.exact = true;
  } else {
    const auto nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
    if (!(var > 0.0)) throw Error(Errc::DegenerateSample, "signed-rank variance is zero");
    r.p_value = std::clamp(normal_two_tailed((r.statistic - mean) / std::sqrt(var)), 0.0, 1.0);
  }
  return r;
}

StatResult cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.size() != b.size()) {
    throw Error(Errc::Precondition, fmt::format("label lists differ in length ({} vs {})", a.size(), b.size()));
  }
  if (a.empty()) throw Error(Errc::DegenerateLabels, "no labels");
  const auto n = static_cast<double>(a.size());
  std::map<std::string, double> ma;
  std::map<std::string, double> mb;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma[a[i]] += 1.0;
    mb[b[i]] += 1.0;
    agree += a[i] == b[i] ? 1.0 : 0.0;
  }
  double pe = 0.0;
  for (const auto& [label, count] : ma) {
    if (const auto it = mb.find(label); it != mb.end()) pe += (count / n) * (it->second / n);
  }
  const double po = agree / n;
  if (pe >= 1.0) throw Error(Errc::DegenerateLabels, "chance agreement is 1, kappa undefined");
  StatResult r;
  r.method = StatMethod::CohenKappa;
  r.n = a.size();
  r.statistic = (po - pe) / (1.0 - pe);
  const double se0 = std::sqrt(pe / (n * (1.0 - pe)));
  r.p_value = se0 > 0.0 ? std::clamp(normal_two_tailed(r.statistic / se0), 0.0, 1.0) : 0.0;
  if (r.statistic < kKappaThreshold) r.flags.push_back("kappa_below_0.7");
  return r;
}

std::string comparison_csv(const sim::SimulationLog& single, const sim::SimulationLog& baseline) {
  const Rates s = rates(single);
  const Rates b = rates(baseline);
  auto dir = [](const sim::SimulationLog& log) -> std::string {
    try {
      return fmt::format("{:.4f}", disparate_impact(cohort_outcomes(log)));
    } catch (const Error&) {
      return "";
    }
  };
  std::string out = "metric,single_agent,multi_agent_baseline\n";
  out += fmt::format("decisions,{},{}\n", s.decisions, b.decisions);
  out += fmt::format("answered,{:.4f},{:.4f}\n", s.answered, b.answered);
  out += fmt::format("compliance,{:.4f},{:.4f}\n", s.compliance, b.compliance);
  out += fmt::format("safety_violation_rate,{:.4f},{:.4f}\n", s.safety_violation, b.safety_violation);
  out += fmt::format("violating_decisions,{},{}\n", s.violating, b.violating);
  out += fmt::format("coordination_conflicts,{},{}\n", s.conflicts, b.conflicts);
  out += fmt::format("disparate_impact_ratio,{},{}\n", dir(single), dir(baseline));
  out += fmt::format("latency_p50_ms,{:.1f},{:.1f}\n", s.latency_p50_ms, b.latency_p50_ms);
  out += fmt::format("latency_p95_ms,{:.1f},{:.1f}\n", s.latency_p95_ms, b.latency_p95_ms);
  return out;
}

std::string cohort_csv(const CohortOutcomes& outcomes) {
  std::string out = "archetype,served,satisfied,violations,satisfaction_rate\n";
  for (const auto& [archetype, c] : outcomes) {
    out += fmt::format("{},{},{},{},{}\n", to_string(archetype), c.served, c.satisfied, c.violations,
                       c.served == 0 ? std::string() : fmt::format("{:.4f}", c.satisfaction_rate()));
  }
  return out;
}

}  // namespace hearth::metrics
