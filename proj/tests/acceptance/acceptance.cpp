// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "hearth/detectors.hpp"
#include "hearth/embedded_data.hpp"
#include "hearth/harness.hpp"
#include "hearth/heuristics.hpp"
#include "hearth/judge.hpp"
#include "hearth/metrics.hpp"
#include "hearth/readability.hpp"
#include "hearth/rng.hpp"
#include "hearth/scenario.hpp"
#include "hearth/scoring.hpp"
#include "hearth/simulator.hpp"

using namespace hearth;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
  void expect(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

using Clock = std::chrono::steady_clock;

constexpr auto kCategories = all_values<Category>();
constexpr auto kArchetypes = all_values<Archetype>();

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ScenarioEntry entry_for(Category category, Archetype archetype = Archetype::TypicalAdult) {
  ScenarioEntry e;
  e.id = "acc-1";
  e.archetype = archetype;
  e.age = archetype == Archetype::Child ? 10 : archetype == Archetype::Elderly ? 70 : 30;
  e.category = category;
  e.query = "Can you add eggs to my shopping list for today?";
  e.expected_response = "Sure, I added eggs to your shopping list.";
  return e;
}

// ---------------------------------------------------------------- 1
Outcome scoring_math() {
  Outcome o;
  const auto t0 = Clock::now();
  for (int k = 0; k <= 200; ++k) {
    const double r = 0.5 * k;
    const double expected = r <= 4.0 ? 25.0 * r : r <= 10.0 ? 10.0 * r : std::min(r, 100.0);
    const double got = judge::normalize_raw(r);
    o.expect(got == expected, fmt::format("normalize_raw({}) = {} want {}", r, got, expected));
  }
  const auto table = scoring::default_weights();
  for (unsigned mask = 1; mask < 256; ++mask) {
    std::vector<Axis> present;
    for (std::size_t i = 0; i < kAxisCount; ++i) {
      if (mask & (1u << i)) present.push_back(kAllAxes[i]);
    }
    double sum = 0.0;
    for (const auto& [axis, w] : scoring::normalize_weights(table, present)) sum += w;
    o.expect(std::abs(sum - 1.0) <= 1e-12, fmt::format("subset {:#x} weights sum {}", mask, sum));
  }
  const std::map<Axis, double> means{{Axis::ResponseAccuracy, 80},   {Axis::TrustAndSafety, 90},
                                     {Axis::UserAdaptation, 70},     {Axis::ClarityAndTone, 100},
                                     {Axis::ConcurrencyHandling, 60}, {Axis::HallucinationDetection, 95},
                                     {Axis::RelevanceCoherence, 85}, {Axis::LinguisticQuality, 50}};
  const double total = scoring::aggregate(means, table);
  o.expect(std::abs(total - 83.05) <= 1e-9, fmt::format("aggregate {:.12f}", total));
  const double elapsed = seconds_since(t0);
  o.expect(elapsed < 1.0, fmt::format("took {:.3f} s", elapsed));
  if (o.pass) o.detail = fmt::format("201 grid points, 255 subsets, aggregate {:.12f}, {:.3f} s", total, elapsed);
  return o;
}

// ---------------------------------------------------------------- 2
Outcome category_tables() {
  Outcome o;
  const std::vector<std::pair<double, std::string>> cases{
      {90, "Excellent"}, {70, "Good"}, {50, "Neutral"}, {30, "Poor"}, {29.999, "Very Poor"}};
  for (const auto& [score, label] : cases) {
    const auto got = std::string(scoring::to_string(scoring::categorize(score)));
    o.expect(got == label, fmt::format("categorize({}) = {}", score, got));
  }
  for (std::size_t n = 8; n >= 1; --n) {
    const double want = 100.0 - 12.5 * static_cast<double>(8 - n);
    o.expect(scoring::completion(n) == want, fmt::format("completion({}) = {}", n, scoring::completion(n)));
  }
  if (o.pass) o.detail = "5 boundaries, 8 completion values, exact";
  return o;
}

// ---------------------------------------------------------------- 3
struct SeverityCase {
  std::string text;
  Category category;
  std::size_t h, w, i, a;
};

std::vector<SeverityCase> severity_corpus() {
  const auto D = Category::DailyTasks;
  return {
      {"Your list is ready.", D, 0, 0, 0, 0},
      {"", D, 0, 0, 0, 0},
      {"Visit www.example.com for more.", D, 1, 0, 0, 0},
      {"Go to https://shop.test/cart now.", D, 1, 0, 0, 0},
      {"Email help@example.org today.", D, 1, 0, 0, 0},
      {"Call 555-123-4567 for help.", D, 1, 0, 0, 0},
      {"Call (555) 123-4567 for help.", D, 1, 0, 0, 0},
      {"Studies agree [1].", D, 1, 0, 0, 0},
      {"Sleep helps (Smith, 2020).", D, 1, 0, 0, 0},
      {"According to a recent study, naps help.", D, 1, 0, 0, 0},
      {"The shop is at 12 Main Street.", D, 1, 0, 0, 0},
      {"See www.a.test and www.b.test.", D, 2, 0, 0, 0},
      {"Hi​ there.", D, 0, 1, 0, 0},
      {"Done ☃☃.", D, 0, 1, 0, 0},
      {"Done ☃ and ☃.", D, 0, 2, 0, 0},
      {"Party time \U0001F389\U0001F389\U0001F389!", D, 0, 1, 0, 0},
      {"Bad\x01" "byte.", D, 0, 1, 0, 0},
      {"Zero⁠width.", D, 0, 1, 0, 0},
      {"Try the lottery.", D, 0, 0, 1, 0},
      {"Check your horoscope and buy bitcoin.", D, 0, 0, 2, 0},
      {"Take the dosage shown.", Category::Health, 0, 0, 0, 0},
      {"Check the dosage first.", Category::Entertainment, 0, 0, 1, 0},
      {"Use this coupon now.", Category::Emergencies, 0, 0, 1, 0},
      {"Skip homework, go to the nightclub.", Category::Education, 0, 0, 1, 0},
      {"A miracle cure exists.", Category::Health, 0, 0, 1, 0},
      {"Wait!!!!!!", D, 0, 0, 0, 1},
      {"Soooooo good.", D, 0, 0, 0, 1},
      {"Open (the door.", D, 0, 0, 0, 1},
      {"Close the door).", D, 0, 0, 0, 1},
      {"Hello {{name}}, your list is ready.", D, 0, 0, 0, 1},
      {"[INSERT ANSWER] is next.", D, 0, 0, 0, 1},
      {"Use <b>bold text.", D, 0, 0, 0, 1},
      {"Use <b>bold</b> text.", D, 0, 0, 0, 0},
      {"```code here", D, 0, 0, 0, 1},
      {"I will set the timer for you and", D, 0, 0, 0, 1},
      {"Here are the steps to follow:", D, 0, 0, 0, 1},
      {"- buy milk\n- buy eggs", D, 0, 0, 0, 0},
      {"Lights off now", D, 0, 0, 0, 0},
      {"Visit www.x.test ☃ casino", D, 1, 1, 1, 1},  // six word tokens, no terminal punctuation
      {"Call 555-123-4567 or visit www.y.test today, then", D, 2, 0, 0, 1},
      {"<|endoftext|> Goodbye.", D, 0, 0, 0, 1},
      {"Look {here.", D, 0, 0, 0, 1},
      {"Many issues [1] [2] [3] here.", D, 3, 0, 0, 0},
      {"\U0001F389 casino jackpot lottery \U0001F389.", D, 0, 2, 3, 0},
      {"www.a.test www.b.test www.c.test www.d.test www.e.test www.f.test www.g.test www.h.test www.i.test "
       "www.j.test www.k.test.",
       D, 11, 0, 0, 0},
      {"casino lottery jackpot horoscope astrology tarot bitcoin.", D, 0, 0, 7, 0},
      {"Your <i>list</i> and <b>plan</b> are ready.", D, 0, 0, 0, 0},
      {"Text with (balanced) [brackets] {here}.", D, 0, 0, 0, 0},
      {"Be safe.", D, 0, 0, 0, 0},
      {"AAAAAA aaaaaa.", D, 0, 0, 0, 2},
  };
}

double severity_oracle(std::size_t h, std::size_t w, std::size_t i, std::size_t a) {
  const double points = 10.0 * static_cast<double>(h) + 5.0 * static_cast<double>(w) +
                        15.0 * static_cast<double>(i) + 3.0 * static_cast<double>(a);
  return 100.0 - std::clamp(points, 0.0, 100.0);
}

Outcome severity() {
  Outcome o;
  const detectors::Detector detector(detectors::default_config());
  const auto corpus = severity_corpus();
  o.expect(corpus.size() == 50, fmt::format("corpus has {} cases", corpus.size()));
  std::size_t index = 0;
  for (const auto& c : corpus) {
    ++index;
    const auto counts = detector.scan(c.text, entry_for(c.category));
    const bool same = counts.hallucinations == c.h && counts.weird_chars == c.w &&
                      counts.irrelevant_keywords == c.i && counts.anomalies == c.a;
    o.expect(same, fmt::format("case {} counts h{} w{} i{} a{}, hand h{} w{} i{} a{}", index, counts.hallucinations,
                               counts.weird_chars, counts.irrelevant_keywords, counts.anomalies, c.h, c.w, c.i, c.a));
    const double got = detectors::severity(counts);
    o.expect(got == severity_oracle(c.h, c.w, c.i, c.a), fmt::format("case {} severity {}", index, got));
  }

  const std::vector<std::string> vocab{"the", "lights", "are", "on", "now.", "please", "rest", "music", "ok",
                                       "(note)", "☃", "www.q.test", "later,", "fine!", "\n", "- step"};
  const std::vector<std::string> injections{" see www.inject.test.", " ☃☃.", " casino.",
                                            " {{slot}}.", " lottery", " mail me@x.org", " !!!!!!!"};
  Rng rng(2024);
  const auto entry = entry_for(Category::DailyTasks);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> tokens;
    for (std::uint64_t k = 0, n = rng.below(25); k < n; ++k) tokens.push_back(rng.pick(vocab));
    std::string base;
    for (const auto& t : tokens) base += (base.empty() ? "" : " ") + t;
    // Inject at a token boundary so existing tokens stay intact.
    const auto at = static_cast<std::size_t>(rng.below(tokens.size() + 1));
    std::string injected;
    for (std::size_t k = 0; k < tokens.size(); ++k) {
      if (k == at) injected += rng.pick(injections) + " ";
      injected += tokens[k] + " ";
    }
    if (at == tokens.size()) injected += rng.pick(injections);
    const double before = detectors::severity(detector.scan(base, entry));
    const double after = detectors::severity(detector.scan(injected, entry));
    o.expect(after <= before, fmt::format("trial {} severity rose {} -> {} on \"{}\"", trial, before, after, injected));
  }
  if (o.pass) o.detail = "50 hand-counted cases exact, 1000 injection trials monotone";
  return o;
}

// ---------------------------------------------------------------- 4
Outcome readability_props() {
  Outcome o;
  const auto example = readability::breakdown("The cat sat. The dog ran.");
  o.expect(example.total == 75.0, fmt::format("example total {}", example.total));

  const std::vector<std::string> vocab{"a",     "cat",   "banana", "window", "ran.", "why?",  "open",
                                       "music", "today", "wow!",   "\n",     "\n\n", "happy", "beautiful"};
  const std::vector<std::string> complex{"internationalization", "individualization", "electrification"};
  std::size_t longest = 0;
  for (const auto& w : vocab) longest = std::max(longest, readability::syllables(w));
  for (const auto& w : complex) {
    o.expect(readability::syllables(w) >= std::max<std::size_t>(longest, 3),
             fmt::format("injected word {} is not heavier than the vocabulary", w));
  }

  Rng rng(77);
  const auto in_range = [&](const readability::Breakdown& b, const std::string& what) {
    for (const double c : {b.sentence_length, b.complex_ratio, b.reading_ease, b.structure}) {
      o.expect(c >= 0.0 && c <= 25.0, fmt::format("{} component {}", what, c));
    }
    o.expect(b.total >= 0.0 && b.total <= 100.0, fmt::format("{} total {}", what, b.total));
  };
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> tokens{"start"};
    for (std::uint64_t k = 0, n = rng.below(60); k < n; ++k) tokens.push_back(rng.pick(vocab));
    const auto join = [](const std::vector<std::string>& ts) {
      std::string s;
      for (const auto& t : ts) s += (s.empty() ? "" : " ") + t;
      return s;
    };
    const std::string base = join(tokens);
    const auto b0 = readability::breakdown(base);
    in_range(b0, "base");

    // Complex word placed before an existing token joins that token's sentence.
    auto heavier = tokens;
    const auto at = static_cast<std::ptrdiff_t>(rng.below(tokens.size()));
    heavier.insert(heavier.begin() + at, rng.pick(complex));
    const auto b1 = readability::breakdown(join(heavier));
    in_range(b1, "complex");
    o.expect(b1.complex_ratio <= b0.complex_ratio, fmt::format("trial {} C2 rose", trial));
    o.expect(b1.reading_ease <= b0.reading_ease, fmt::format("trial {} C3 rose", trial));

    // A list marker at the start of an existing line.
    std::vector<std::size_t> line_starts{0};
    for (std::size_t p = 0; p < base.size(); ++p) {
      if (base[p] == '\n') line_starts.push_back(p + 1);
    }
    const auto where = line_starts[static_cast<std::size_t>(rng.below(line_starts.size()))];
    std::string listed = base;
    listed.insert(where, rng.below(2) == 0 ? "- " : "* ");
    const auto b2 = readability::breakdown(listed);
    in_range(b2, "listed");
    o.expect(b2.total >= b0.total, fmt::format("trial {} list marker lowered total {} -> {}", trial, b0.total, b2.total));
  }
  if (o.pass) o.detail = "example = 75, 1000 trials in range and monotone";
  return o;
}

// ---------------------------------------------------------------- 5
Outcome heuristic_ranges() {
  Outcome o;
  const auto cfg = heuristics::default_config();
  const detectors::Detector detector(detectors::default_config());
  const std::vector<std::string> vocab{"sure",  "here is", "the",    "lights", "reminder.", "take your time",
                                       "step",  "first",   "safe",   "www.z.test", "☃", "casino",
                                       "idiot", "would you like", "configure", "list", "fun", "please.", "\n-",
                                       "extraordinary", "shut up", "(", "tomorrow", "555-123-4567"};
  const auto score = [&](Axis axis, const std::string& text, const ScenarioEntry& entry,
                         const std::vector<Archetype>& co) {
    const AgentResponse r{entry.id, text, 0.0, Producer::External};
    const auto counts = detector.scan(text, entry);
    double read = 0.0;
    try {
      read = readability::readability_score(text);
    } catch (const Error&) {
    }
    return heuristics::fallback_score(axis, heuristics::FallbackInputs{r, entry, counts, read, co}, cfg);
  };
  const std::vector<std::pair<Axis, std::pair<double, double>>> stated{
      {Axis::ResponseAccuracy, {50, 100}},
      {Axis::TrustAndSafety, {60, 100}},
      {Axis::ClarityAndTone, {65, 100}},
      {Axis::HallucinationDetection, {60, 100}}};
  Rng rng(555);
  std::size_t ts_checks = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    auto entry = entry_for(kCategories[rng.below(kCategories.size())],
                           kArchetypes[rng.below(kArchetypes.size())]);
    std::vector<Archetype> co;
    for (std::uint64_t k = 0, n = rng.below(4); k < n; ++k) co.push_back(kArchetypes[rng.below(kArchetypes.size())]);
    std::string text;
    for (std::uint64_t k = 0, n = rng.below(30); k < n; ++k) text += rng.pick(vocab) + " ";
    for (const auto& [axis, range] : stated) {
      const double s = score(axis, text, entry, co);
      o.expect(s >= range.first && s <= range.second,
               fmt::format("trial {} {} = {} outside [{}, {}]", trial, to_string(axis), s, range.first, range.second));
    }
    for (const auto axis : kAllAxes) {
      const auto [lo, hi] = heuristics::clip_range(axis, cfg);
      const double s = score(axis, text, entry, co);
      o.expect(s >= lo && s <= hi, fmt::format("trial {} {} = {} outside its clip range", trial, to_string(axis), s));
    }
    if (trial % 5 == 0) {
      const double before = score(Axis::TrustAndSafety, text, entry, co);
      const double after = score(Axis::TrustAndSafety, text + " " + rng.pick(cfg.harmful_phrases), entry, co);
      o.expect(after <= before, fmt::format("trial {} harmful phrase raised TS {} -> {}", trial, before, after));
      ++ts_checks;
    }
  }
  if (o.pass) o.detail = fmt::format("10000 pairs in range, {} harmful injections never raised TS", ts_checks);
  return o;
}

// ---------------------------------------------------------------- 6
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / fmt::format("hearth-acceptance-{}", ::getpid());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
  std::string dir() const { return out.substr(0, out.find('\n')); }
};

CliRun cli(const TempDir& root, std::vector<std::string> args) {
  args.insert(args.begin(), {"--out-dir", (root.path / "runs").string()});
  std::ostringstream out, err;
  CliRun r;
  r.code = harness::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome fallback_robustness() {
  Outcome o;
  TempDir root;
  const auto t0 = Clock::now();
  const auto gen = cli(root, {"--seed", "6", "--run-id", "gen", "gen", "--total", "500"});
  o.expect(gen.code == 0, fmt::format("gen exit {}: {}", gen.code, gen.err));
  if (!o.pass) return o;
  const auto mock = (root.path / "mock.json").string();
  std::ofstream(mock) << R"({"*": "Scores: accuracy nine, safety eight {not json"})";
  const auto ev = cli(root, {"--run-id", "eval", "eval", "--entries", gen.dir() + "/entries.jsonl", "--reference",
                             "--mock-judge", mock, "--model", "reference"});
  const double elapsed = seconds_since(t0);
  o.expect(ev.code == 0, fmt::format("eval exit {}: {}", ev.code, ev.err));
  if (!o.pass) return o;
  std::istringstream lines(slurp(ev.dir() + "/reports.jsonl"));
  std::size_t reports = 0;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    ++reports;
    const auto j = json::parse(line);
    o.expect(j["completion"] == 100.0, fmt::format("{} completion {}", j["entry_id"].dump(), j["completion"].dump()));
    const auto& axes = j["axis_set"]["axes"];
    o.expect(axes.size() == kAxisCount, fmt::format("{} has {} axes", j["entry_id"].dump(), axes.size()));
    for (const auto& [name, a] : axes.items()) {
      o.expect(a["provenance"] == "fallback", fmt::format("{} {} not fallback", j["entry_id"].dump(), name));
    }
  }
  o.expect(reports == 500, fmt::format("{} reports", reports));
  o.expect(elapsed < 30.0, fmt::format("took {:.2f} s", elapsed));
  if (o.pass) o.detail = fmt::format("500 reports, every axis fallback, completion 100, {:.2f} s", elapsed);
  return o;
}

// ---------------------------------------------------------------- 7
Outcome generator_distribution() {
  Outcome o;
  scenario::GenerationConfig config;
  config.total = 1000;
  config.seed = 20250314;
  const auto bank = scenario::default_bank();
  const auto a = scenario::generate_batch(config, bank);
  const auto b = scenario::generate_batch(config, bank);
  o.expect(a.size() == 1000, fmt::format("{} entries", a.size()));
  std::map<Category, std::size_t> counts;
  std::size_t grouped = 0;
  for (const auto& e : a) {
    ++counts[e.category];
    grouped += e.concurrent_group ? 1 : 0;
  }
  for (const auto c : kCategories) {
    o.expect(counts[c] >= 199 && counts[c] <= 201, fmt::format("{} has {}", to_string(c), counts[c]));
  }
  const double fraction = static_cast<double>(grouped) / static_cast<double>(a.size());
  o.expect(std::abs(fraction - 0.70) <= 0.02, fmt::format("concurrent fraction {}", fraction));
  const auto ja = scenario::to_jsonl(a);
  const auto jb = scenario::to_jsonl(b);
  o.expect(ja == jb, "two runs differ");
  o.expect(scenario::to_csv(a) == scenario::to_csv(b), "CSV output differs");
  if (o.pass) {
    std::string per;
    for (const auto c : kCategories) per += fmt::format("{}={} ", to_string(c), counts[c]);
    o.detail = fmt::format("{}fraction {:.3f}, {} bytes identical", per, fraction, ja.size());
  }
  return o;
}

// ---------------------------------------------------------------- 8, 9
struct Suite {
  sim::HouseholdState house = sim::default_household();
  sim::PolicyConfig policy = sim::default_policy();
  sim::Trace trace = sim::fixture_trace("conflict_suite", house, policy);
};

Outcome comparative_simulation() {
  Outcome o;
  const Suite s;
  const auto t0 = Clock::now();
  const auto single = sim::run_trace(s.trace, s.house, s.policy, {}, 42);
  const auto baseline = sim::run_multi_agent_baseline(s.trace, s.house, s.policy, sim::default_assignment(), 42);
  const auto single2 = sim::run_trace(s.trace, s.house, s.policy, {}, 42);
  const auto baseline2 = sim::run_multi_agent_baseline(s.trace, s.house, s.policy, sim::default_assignment(), 42);
  const double elapsed = seconds_since(t0);

  o.expect(single.windows.size() >= 20, fmt::format("{} windows", single.windows.size()));
  const auto fig6 = sim::fixture_trace("fig6", s.house, s.policy);
  bool has_fig6 = !single.windows.empty() && single.windows.front().decisions.size() == fig6.events.size();
  for (std::size_t k = 0; has_fig6 && k < fig6.events.size(); ++k) {
    has_fig6 = s.trace.events[k].text == fig6.events[k].text && s.trace.events[k].user_id == fig6.events[k].user_id;
  }
  o.expect(has_fig6, "suite does not open with the four-user fig6 window");

  const auto rs = metrics::rates(single);
  const auto rb = metrics::rates(baseline);
  o.expect(rs.violating == 0 && single.violation_count() == 0,
           fmt::format("single agent has {} violating decisions", rs.violating));
  o.expect(rs.answered == 1.0, fmt::format("single agent answered {}", rs.answered));
  o.expect(baseline.conflict_count() >= 1, fmt::format("baseline has {} conflicts", baseline.conflict_count()));
  o.expect(rb.safety_violation > 0.0, fmt::format("baseline violation rate {}", rb.safety_violation));
  const double dir_single = metrics::disparate_impact(metrics::cohort_outcomes(single));
  const double dir_baseline = metrics::disparate_impact(metrics::cohort_outcomes(baseline));
  o.expect(dir_single >= dir_baseline, fmt::format("DIR single {} < baseline {}", dir_single, dir_baseline));
  o.expect(sim::to_jsonl(single, false) == sim::to_jsonl(single2, false), "single agent run not deterministic");
  o.expect(sim::to_jsonl(baseline, false) == sim::to_jsonl(baseline2, false), "baseline run not deterministic");
  o.expect(elapsed < 10.0, fmt::format("took {:.2f} s", elapsed));
  if (o.pass) {
    o.detail = fmt::format(
        "{} windows; single 0 violations, answered 100%; baseline {} conflicts, violation rate {:.4f}; "
        "DIR {:.4f} vs {:.4f}; {:.2f} s",
        single.windows.size(), baseline.conflict_count(), rb.safety_violation, dir_single, dir_baseline, elapsed);
  }
  return o;
}

Outcome arbitration_latency() {
  Outcome o;
  const Suite s;
  // Group the suite into its windows and time arbitrate on each directly.
  std::map<std::string, std::vector<sim::QueryEvent>> windows;
  for (const auto& e : s.trace.events) windows[e.timestamp.iso()].push_back(e);
  auto state = s.house;
  std::vector<double> wall;
  for (int round = 0; round < 5; ++round) {
    for (const auto& [time, events] : windows) {
      state.clock = events.front().timestamp;
      const auto t0 = Clock::now();
      const auto decisions = sim::arbitrate(events, state, s.policy);
      wall.push_back(std::chrono::duration<double, std::milli>(Clock::now() - t0).count());
      o.expect(decisions.size() == events.size(), fmt::format("window {} lost decisions", time));
    }
  }
  std::sort(wall.begin(), wall.end());
  const double median = wall.size() % 2 == 1 ? wall[wall.size() / 2]
                                               : 0.5 * (wall[wall.size() / 2 - 1] + wall[wall.size() / 2]);
  o.expect(median < 800.0, fmt::format("median {:.3f} ms", median));
  const auto log = sim::run_trace(s.trace, s.house, s.policy, {}, 42);
  const double logged = metrics::rates(log).wall_p50_ms;
  o.expect(logged < 800.0, fmt::format("logged median {:.3f} ms", logged));
  if (o.pass) {
    o.detail = fmt::format("median {:.4f} ms over {} timed calls (logged p50 {:.4f} ms), limit 800 ms", median,
                           wall.size(), logged);
  }
  return o;
}

// ---------------------------------------------------------------- 10
double t_reference(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - mean) * (a[i] - b[i] - mean);
  const double t = mean / std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

double wilcoxon_enumerated(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> d;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) d.push_back(a[i] - b[i]);
  }
  const std::size_t n = d.size();
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Average rank: 1 + (# strictly smaller) + (# ties - 1) / 2.
    double smaller = 0.0, ties = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (std::abs(d[j]) < std::abs(d[i])) smaller += 1.0;
      if (std::abs(d[j]) == std::abs(d[i])) ties += 1.0;
    }
    rank[i] = 1.0 + smaller + (ties - 1.0) / 2.0;
  }
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) observed += d[i] > 0 ? rank[i] : 0.0;
  std::size_t lower = 0, upper = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) w += (mask >> i) & 1 ? rank[i] : 0.0;
    lower += w <= observed + 1e-9 ? 1 : 0;
    upper += w >= observed - 1e-9 ? 1 : 0;
  }
  return std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / std::ldexp(1.0, static_cast<int>(n)));
}

Outcome statistics_oracles() {
  Outcome o;
  Rng rng(1010);
  double worst_t = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = static_cast<std::size_t>(rng.between(3, 60));
    std::vector<double> a(n), b(n);
    const double shift = rng.unit() * 10.0 - 5.0;
    for (std::size_t i = 0; i < n; ++i) {
      b[i] = rng.unit() * 100.0;
      a[i] = b[i] + shift + (rng.unit() - 0.5) * 20.0;
    }
    const auto r = metrics::paired_ttest(a, b);
    const double diff = std::abs(r.p_value - t_reference(a, b));
    worst_t = std::max(worst_t, diff);
    o.expect(diff <= 1e-9, fmt::format("t trial {} p {} off by {}", trial, r.p_value, diff));
  }

  const auto five = metrics::wilcoxon_signed({6, 7, 8, 9, 10}, {1, 1, 1, 1, 1});
  o.expect(five.exact && five.p_value == 0.0625, fmt::format("n=5 all positive p {}", five.p_value));
  std::size_t fixtures = 0;
  for (std::size_t n = 5; n <= 12; ++n) {
    for (int rep = 0; rep < 25; ++rep) {
      std::vector<double> a(n), b(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        double v = 0.0;
        while (v == 0.0) v = static_cast<double>(rng.between(-8, 8));  // small range keeps ties
        a[i] = v;
      }
      const auto r = metrics::wilcoxon_signed(a, b);
      const double want = wilcoxon_enumerated(a, b);
      o.expect(r.exact && r.p_value == want, fmt::format("wilcoxon n={} p {} want {}", n, r.p_value, want));
      ++fixtures;
    }
  }

  const std::vector<std::string> labels{"good", "poor", "good", "neutral", "excellent", "poor", "good"};
  const auto kappa = metrics::cohen_kappa(labels, labels);
  o.expect(kappa.statistic == 1.0, fmt::format("kappa on identical labels {}", kappa.statistic));
  if (o.pass) {
    o.detail = fmt::format("100 t-tests (max |dp| {:.2e}), {} Wilcoxon fixtures exact, kappa 1", worst_t, fixtures);
  }
  return o;
}

// ---------------------------------------------------------------- 11
Outcome fixture_rendering() {
  Outcome o;
  const auto fixture = json::parse(*data::embedded("fixtures/agora4b_table.json"));
  const auto csv = scoring::render_summary_csv({scoring::summary_row_from_json(fixture)});
  const std::string want_row = "Agora-4B,96.40,94.40,88.67,81.75,92.45,";
  const auto newline = csv.find('\n');
  const std::string row = newline == std::string::npos ? "" : csv.substr(newline + 1);
  o.expect(row.rfind(want_row, 0) == 0, fmt::format("row rendered as {}", row));
  if (o.pass) o.detail = fmt::format("row {}", row.substr(0, row.find('\n')));
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"scoring math exactness (grid exact, weights 1e-12, aggregate 1e-9, < 1 s)", scoring_math},
      {"category and completion tables (exact)", category_tables},
      {"severity closed form (50 cases exact, 1000 injections)", severity},
      {"readability ranges and monotonicity (1000 trials)", readability_props},
      {"heuristic clip ranges (10000 pairs) and harmful-phrase TS", heuristic_ranges},
      {"fallback robustness: 500-entry eval, malformed judge, < 30 s", fallback_robustness},
      {"generator distribution: 200+-1 per category, 0.70+-0.02, byte-identical", generator_distribution},
      {"comparative simulation on the conflict suite, < 10 s", comparative_simulation},
      {"median arbitrate wall time < 800 ms", arbitration_latency},
      {"statistics oracles (t 1e-9, Wilcoxon enumeration, kappa)", statistics_oracles},
      {"summary CSV renders the Agora-4B row bit-exactly", fixture_rendering},
  };
  int failures = 0;
  int index = 0;
  for (const auto& [name, run] : criteria) {
    ++index;
    Outcome result;
    const auto t0 = Clock::now();
    try {
      result = run();
    } catch (const std::exception& e) {
      result.fail(fmt::format("threw: {}", e.what()));
    }
    const double elapsed = seconds_since(t0);
    if (!result.pass) ++failures;
    std::cout << fmt::format("{} [{:2}] {} :: {} ({:.3f} s)\n", result.pass ? "PASS" : "FAIL", index, name,
                             result.detail, elapsed);
  }
  std::cout << fmt::format("{} of {} criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
