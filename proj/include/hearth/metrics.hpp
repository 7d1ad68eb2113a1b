#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hearth/core.hpp"
#include "hearth/simulator.hpp"

namespace hearth::metrics {

struct CohortStats {
  std::size_t served = 0;
  std::size_t satisfied = 0;
  std::size_t violations = 0;
  std::vector<double> latencies_ms;

  double satisfaction_rate() const;  // throws Error(EmptyCohort) when served == 0
};

using CohortOutcomes = std::map<Archetype, CohortStats>;

// One cohort per archetype (all four, possibly empty).
CohortOutcomes cohort_outcomes(const sim::SimulationLog& log);

// min rate / max rate over the cohorts. 1.0 when every rate is 0.
// Throws Error(EmptyCohort) for an empty map or a cohort with served == 0.
double disparate_impact(const CohortOutcomes& outcomes);

// Nearest-rank percentile: the ceil(p/100 * n)-th smallest value (p in (0,100]).
// Throws Error(Precondition) on an empty sample or p outside (0,100].
double percentile(std::vector<double> values, double p);

struct Rates {
  std::size_t decisions = 0;
  std::size_t served = 0;
  std::size_t satisfied = 0;
  std::size_t violating = 0;
  std::size_t conflicts = 0;
  double compliance = 0.0;        // satisfied / served
  double answered = 0.0;          // served / decisions
  double safety_violation = 0.0;  // violating decisions / decisions
  double latency_p50_ms = 0.0;
  double latency_p95_ms = 0.0;
  double wall_p50_ms = 0.0;  // measured arbitration time per window
};

// Throws Error(EmptyLog) when the log holds no decisions.
Rates rates(const sim::SimulationLog& log);
nlohmann::json to_json(const Rates& r);

enum class StatMethod { PairedT, WilcoxonSigned, CohenKappa };
std::string_view to_string(StatMethod m);

struct StatResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  StatMethod method = StatMethod::PairedT;
  bool exact = false;  // Wilcoxon: exact distribution used
  std::vector<std::string> flags;
};

nlohmann::json to_json(const StatResult& r);

// Regularized incomplete beta I_x(a, b) by continued fraction.
double incomplete_beta(double a, double b, double x);
// Two-tailed P(|T| >= |t|) for Student's t with df degrees of freedom.
double student_t_two_tailed(double t, double df);

// Two-tailed paired t-test on a - b. Throws Error(DegenerateSample) for
// fewer than 2 pairs, unequal lengths or zero variance of the differences.
StatResult paired_ttest(const std::vector<double>& a, const std::vector<double>& b);

// Wilcoxon signed-rank on a - b, zero differences dropped, average ranks for
// ties. Exact distribution for n <= 25, normal approximation with tie
// correction above. Throws Error(DegenerateSample) when fewer than 5
// non-zero differences remain.
StatResult wilcoxon_signed(const std::vector<double>& a, const std::vector<double>& b);
inline constexpr std::size_t kWilcoxonExactMax = 25;

// Cohen's kappa between two annotators. Flags "kappa_below_0.7" under the
// agreement threshold. Throws Error(DegenerateLabels) when p_e == 1 or the
// lists are empty, Error(Precondition) on unequal lengths.
StatResult cohen_kappa(const std::vector<std::string>& a, const std::vector<std::string>& b);
inline constexpr double kKappaThreshold = 0.7;

// "metric,single_agent,multi_agent_baseline" table.
std::string comparison_csv(const sim::SimulationLog& single, const sim::SimulationLog& baseline);
// Per-archetype served/satisfied/violations/rate rows.
std::string cohort_csv(const CohortOutcomes& outcomes);

}  // namespace hearth::metrics
