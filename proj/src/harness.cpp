#include "hearth/harness.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hearth/detectors.hpp"
#include "hearth/embedded_data.hpp"
#include "hearth/heuristics.hpp"
#include "hearth/judge.hpp"
#include "hearth/metrics.hpp"
#include "hearth/scenario.hpp"
#include "hearth/scoring.hpp"
#include "hearth/simulator.hpp"
#include "hearth/store.hpp"
#include "hearth/text.hpp"

namespace hearth::harness {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
    case Errc::MissingTemplate:
    case Errc::InfeasibleQuota:
    case Errc::UnknownAxis:
      return kExitConfig;
    case Errc::EndpointUnreachable:
      return kExitDegraded;
    default:
      return kExitInput;
  }
}

namespace {

struct GlobalOpts {
  std::uint64_t seed = 42;
  std::string out_dir = "runs";
  std::string run_id;
};

struct GenOpts {
  std::size_t total = 1000;
  double concurrent_fraction = 0.70;
  std::size_t max_group = 4;
  std::string templates;
  std::string language = "en";
};

struct EvalOpts {
  std::string entries;
  std::string responses;
  bool reference = false;
  std::string mock_judge;
  std::string endpoint_url = judge::EndpointConfig{}.base_url;
  std::string endpoint_path = judge::EndpointConfig{}.path;
  std::string judge_model = judge::EndpointConfig{}.model_name;
  int timeout_ms = judge::EndpointConfig{}.timeout_ms;
  std::size_t retries = judge::EndpointConfig{}.retries;
  int backoff_ms = judge::EndpointConfig{}.backoff_ms;
  std::size_t max_in_flight = judge::EndpointConfig{}.max_in_flight;
  std::size_t runs = 1;
  std::vector<std::string> axes;
  std::vector<std::string> weights;
  std::string model = "agent";
};

struct SimOpts {
  std::string trace = "fig6";
  std::string arch = "both";
  std::string policy;
  std::string household;
  std::vector<std::string> autonomy;
};

struct ReportOpts {
  std::string parent;
  std::string trace = "conflict_suite";
  std::string day;
  std::string profile;
  std::string table;
};

struct StatsOpts {
  std::string a;
  std::string b;
  std::string test = "all";
  std::string labels_a;
  std::string labels_b;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::InputError, "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::InputError, "cannot write " + path.string());
  out << body;
}

json read_json(const std::string& path) {
  const auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::InputError, path + ": invalid JSON");
  return j;
}

fs::path make_run_dir(const GlobalOpts& g, const std::string& command) {
  std::string id = g.run_id;
  if (id.empty()) {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%S", &tm);
    id = fmt::format("{}-{}-s{}", command, stamp, g.seed);
  }
  fs::path dir = fs::path(g.out_dir) / id;
  for (int n = 2; fs::exists(dir); ++n) dir = fs::path(g.out_dir) / fmt::format("{}-{}", id, n);
  fs::create_directories(dir);
  return dir;
}

std::string ini_quote(const std::string& v) { return "\"" + v + "\""; }

// Options of one app in INI form: explicit values first, then non-empty
// defaults. Empty values are skipped so the file reads back cleanly.
void ini_options(const CLI::App& app, std::string& out) {
  for (const CLI::Option* opt : app.get_options()) {
    if (!opt->get_configurable() || opt == app.get_help_ptr() || opt == app.get_help_all_ptr() ||
        opt == app.get_config_ptr()) {
      continue;
    }
    std::vector<std::string> values = opt->count() > 0 ? opt->results() : std::vector<std::string>{};
    if (values.empty() && !opt->get_default_str().empty()) values.push_back(opt->get_default_str());
    std::erase(values, "");
    if (values.empty()) continue;
    std::string rhs;
    if (values.size() == 1) {
      rhs = ini_quote(values[0]);
    } else {
      rhs = "[";
      for (std::size_t i = 0; i < values.size(); ++i) rhs += (i ? "," : "") + ini_quote(values[i]);
      rhs += "]";
    }
    out += opt->get_single_name() + "=" + rhs + "\n";
  }
}

std::string run_config(const CLI::App& app, const CLI::App& sub) {
  std::string out;
  ini_options(app, out);
  out += "[" + sub.get_name() + "]\n";
  ini_options(sub, out);
  return out;
}

std::vector<double> read_numbers(const std::string& path) {
  std::vector<double> out;
  for (const auto& line : text::split(read_file(path), '\n')) {
    const auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(std::string(t), &used));
      if (used != t.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw Error(Errc::InputError, fmt::format("{}: not a number: '{}'", path, t));
    }
  }
  return out;
}

std::vector<std::string> read_labels(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& line : text::split(read_file(path), '\n')) {
    const auto t = text::trim(line);
    if (!t.empty()) out.emplace_back(t);
  }
  return out;
}

std::vector<AgentResponse> read_responses(const std::string& path) {
  std::vector<AgentResponse> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(read_file(path), '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::InputError, fmt::format("{}:{}: invalid JSON", path, line_no));
    try {
      out.push_back(j.get<AgentResponse>());
    } catch (const std::exception& e) {
      throw Error(Errc::InputError, fmt::format("{}:{}: {}", path, line_no, e.what()));
    }
  }
  return out;
}

int cmd_gen(const GlobalOpts& g, const GenOpts& o, const fs::path& dir, std::ostream& err) {
  const auto bank = o.templates.empty() ? scenario::default_bank() : scenario::load_bank(o.templates);
  scenario::GenerationConfig cfg;
  cfg.total = o.total;
  cfg.concurrent_fraction = o.concurrent_fraction;
  cfg.max_group_size = o.max_group;
  cfg.seed = g.seed;
  cfg.language = o.language;
  const auto batch = scenario::generate_batch(cfg, bank);
  scenario::DistributionExpectation expect;
  if (o.total > 0) {
    expect.concurrent_fraction = o.concurrent_fraction;
    // Small batches can only hit the fraction to within one entry.
    expect.fraction_tolerance = std::max(expect.fraction_tolerance, 1.0 / static_cast<double>(o.total));
  }
  const auto report = scenario::validate_distribution(batch, expect);
  write_file(dir / "entries.jsonl", scenario::to_jsonl(batch));
  write_file(dir / "entries.csv", scenario::to_csv(batch));
  write_file(dir / "distribution.json", scenario::to_json(report).dump(2) + "\n");
  if (!report.ok()) {
    err << json{{"error", "InfeasibleQuota"}, {"message", "generated batch misses its quota"}}.dump() << '\n';
    return kExitInput;
  }
  return kExitOk;
}

int cmd_eval(const EvalOpts& o, const fs::path& dir, std::ostream& err) {
  const auto entries = scenario::from_jsonl(read_file(o.entries));
  std::vector<AgentResponse> responses;
  if (o.reference) {
    for (const auto& e : entries) responses.push_back({e.id, e.expected_response, 0.0, Producer::External});
  } else {
    if (o.responses.empty()) throw Error(Errc::ConfigError, "eval needs --responses or --reference");
    responses = read_responses(o.responses);
  }

  scoring::EvaluatorOptions options;
  options.n_runs = o.runs;
  options.endpoint.base_url = o.endpoint_url;
  options.endpoint.path = o.endpoint_path;
  options.endpoint.model_name = o.judge_model;
  options.endpoint.timeout_ms = o.timeout_ms;
  options.endpoint.retries = o.retries;
  options.endpoint.backoff_ms = o.backoff_ms;
  options.endpoint.max_in_flight = o.max_in_flight;
  if (!o.axes.empty()) {
    options.enabled.clear();
    for (const auto& a : o.axes) options.enabled.push_back(parse_enum<Axis>(a));
  }
  for (const auto& w : o.weights) {
    const auto eq = w.find('=');
    if (eq == std::string::npos) throw Error(Errc::ConfigError, "weight override must be axis=value: " + w);
    try {
      options.weights[parse_enum<Axis>(w.substr(0, eq))] = std::stod(w.substr(eq + 1));
    } catch (const std::invalid_argument&) {
      throw Error(Errc::ConfigError, "bad weight value: " + w);
    }
  }

  std::unique_ptr<judge::Transport> transport;
  if (!o.mock_judge.empty()) {
    transport = std::make_unique<judge::MockTransport>(read_json(o.mock_judge));
  } else {
    transport = std::make_unique<judge::HttpTransport>(options.endpoint);
  }
  const scoring::Evaluator evaluator(detectors::Detector(detectors::default_config()), heuristics::default_config(),
                                     *transport, options);
  const auto reports = evaluator.evaluate_batch(entries, responses);

  std::string lines;
  bool degraded = false;
  for (const auto& r : reports) {
    lines += scoring::to_json(r).dump() + "\n";
    degraded |= r.axis_set.endpoint_degraded;
  }
  write_file(dir / "reports.jsonl", lines);
  write_file(dir / "summary.csv", scoring::render_summary_csv({scoring::summarize(o.model, reports)}));
  if (degraded) {
    err << json{{"warning", "EndpointUnreachable"},
                {"message", "judge endpoint unreachable, affected axes scored by fallback heuristics"}}
               .dump()
        << '\n';
    return kExitDegraded;
  }
  return kExitOk;
}

struct World {
  sim::HouseholdState household;
  sim::PolicyConfig policy;
  sim::Trace trace;
};

World load_world(const std::string& trace, const std::string& policy, const std::string& household) {
  World w;
  w.household = household.empty() ? sim::default_household() : sim::household_from_json(read_json(household));
  w.policy = policy.empty() ? sim::default_policy() : sim::policy_from_json(read_json(policy));
  w.trace = (trace == "fig6" || trace == "conflict_suite") ? sim::fixture_trace(trace, w.household, w.policy)
                                                            : sim::load_trace(trace, w.household, w.policy);
  return w;
}

void write_sim_outputs(const sim::SimulationLog& log, const std::string& tag, const fs::path& dir) {
  write_file(dir / (tag + "_log.jsonl"), sim::to_jsonl(log));
  store::EpisodicLog episodic((dir / (tag + "_episodic.csv")).string());
  for (const auto& r : log.records) episodic.append(r);
  const auto cohorts = metrics::cohort_outcomes(log);
  json m{{"architecture", log.architecture}, {"seed", log.seed}};
  if (log.decision_count() > 0) m["rates"] = metrics::to_json(metrics::rates(log));
  try {
    m["disparate_impact"] = metrics::disparate_impact(cohorts);
  } catch (const Error& e) {
    m["disparate_impact"] = nullptr;
    m["disparate_impact_note"] = e.what();
  }
  m["final_state"] = sim::devices_to_json(log.final_state.devices);
  write_file(dir / (tag + "_metrics.json"), m.dump(2) + "\n");
  write_file(dir / (tag + "_cohorts.csv"), metrics::cohort_csv(cohorts));
}

int cmd_simulate(const GlobalOpts& g, const SimOpts& o, const fs::path& dir) {
  const World w = load_world(o.trace, o.policy, o.household);
  std::map<std::string, AutonomyMode> autonomy;
  for (const auto& a : o.autonomy) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw Error(Errc::ConfigError, "autonomy override must be user=mode: " + a);
    autonomy[a.substr(0, eq)] = parse_enum<AutonomyMode>(a.substr(eq + 1));
  }
  std::optional<sim::SimulationLog> single;
  std::optional<sim::SimulationLog> baseline;
  if (o.arch == "single" || o.arch == "both") {
    single = sim::run_trace(w.trace, w.household, w.policy, autonomy, g.seed);
    write_sim_outputs(*single, "single", dir);
  }
  if (o.arch == "baseline" || o.arch == "both") {
    baseline = sim::run_multi_agent_baseline(w.trace, w.household, w.policy, sim::default_assignment(), g.seed);
    write_sim_outputs(*baseline, "baseline", dir);
  }
  if (single && baseline && single->decision_count() > 0) {
    write_file(dir / "comparison.csv", metrics::comparison_csv(*single, *baseline));
  }
  return kExitOk;
}

int cmd_report(const GlobalOpts& g, const ReportOpts& o, const fs::path& dir) {
  if (o.parent.empty() && o.table.empty()) throw Error(Errc::ConfigError, "report needs --parent or --table");
  if (!o.table.empty()) {
    json row;
    if (o.table == "agora4b") {
      row = json::parse(*data::embedded("fixtures/agora4b_table.json"));
    } else {
      row = read_json(o.table);
    }
    std::vector<scoring::SummaryRow> rows;
    if (row.is_array()) {
      for (const auto& r : row) rows.push_back(scoring::summary_row_from_json(r));
    } else {
      rows.push_back(scoring::summary_row_from_json(row));
    }
    write_file(dir / "summary.csv", scoring::render_summary_csv(rows));
  }
  if (!o.parent.empty()) {
    const World w = load_world(o.trace, "", "");
    UserProfile child;
    if (!o.profile.empty()) {
      child = store::load_profile(o.profile);
    } else {
      const auto* occ = w.household.find(o.parent);
      if (!occ) throw Error(Errc::InputError, "unknown user " + o.parent);
      child = occ->profile;
    }
    if (child.user_id != o.parent) throw Error(Errc::InputError, "profile is for " + child.user_id);
    const auto log = sim::run_trace(w.trace, w.household, w.policy, {}, g.seed);
    SimTime day = o.day.empty() ? (w.trace.events.empty() ? SimTime{} : w.trace.events.front().timestamp)
                                : SimTime::parse(o.day + "T00:00:00");
    const auto report = sim::parent_report(log, child, day);
    write_file(dir / "parent_report.json", sim::to_json(report).dump(2) + "\n");
    store::EpisodicLog episodic((dir / "parent_episodic.csv").string());
    for (const auto& a : report.alerts) episodic.append(a);
    episodic.append(report.record);
  }
  return kExitOk;
}

int cmd_stats(const StatsOpts& o, const fs::path& dir) {
  json out = json::object();
  if (!o.a.empty() || !o.b.empty()) {
    if (o.a.empty() || o.b.empty()) throw Error(Errc::ConfigError, "paired tests need both --a and --b");
    const auto a = read_numbers(o.a);
    const auto b = read_numbers(o.b);
    if (o.test == "ttest" || o.test == "all") out["paired_t"] = metrics::to_json(metrics::paired_ttest(a, b));
    if (o.test == "wilcoxon" || o.test == "all") {
      out["wilcoxon_signed"] = metrics::to_json(metrics::wilcoxon_signed(a, b));
    }
  }
  if (!o.labels_a.empty() || !o.labels_b.empty()) {
    if (o.labels_a.empty() || o.labels_b.empty()) throw Error(Errc::ConfigError, "kappa needs both label files");
    out["cohen_kappa"] = metrics::to_json(metrics::cohen_kappa(read_labels(o.labels_a), read_labels(o.labels_b)));
  }
  if (out.empty()) throw Error(Errc::ConfigError, "stats needs --a/--b or --labels-a/--labels-b");
  write_file(dir / "stats.json", out.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"hearth: multi-user household assistant evaluation and simulation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI-style config file ([gen], [eval], ... sections)");
  app.allow_config_extras(CLI::config_extras_mode::error);

  GlobalOpts g;
  app.add_option("--seed", g.seed, "global RNG seed")->envname("HEARTH_SEED")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "root of the run directories")->capture_default_str();
  app.add_option("--run-id", g.run_id, "run directory name (default: command, UTC stamp and seed)");

  GenOpts gen;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic scenario batch");
  gen_cmd->add_option("--total", gen.total)->capture_default_str();
  gen_cmd->add_option("--concurrent-fraction", gen.concurrent_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen_cmd->add_option("--max-group", gen.max_group)->capture_default_str();
  gen_cmd->add_option("--templates", gen.templates, "template bank JSON (default: built in)");
  gen_cmd->add_option("--language", gen.language)->capture_default_str();

  EvalOpts ev;
  auto* eval_cmd = app.add_subcommand("eval", "score agent responses");
  eval_cmd->add_option("--entries", ev.entries, "scenario JSON-lines")->required();
  eval_cmd->add_option("--responses", ev.responses, "response JSON-lines");
  eval_cmd->add_flag("--reference", ev.reference, "score each entry's expected response");
  eval_cmd->add_option("--mock-judge", ev.mock_judge, "canned judge verdicts keyed by entry id");
  eval_cmd->add_option("--endpoint-url", ev.endpoint_url)->envname("HEARTH_ENDPOINT_URL")->capture_default_str();
  eval_cmd->add_option("--endpoint-path", ev.endpoint_path)->capture_default_str();
  eval_cmd->add_option("--judge-model", ev.judge_model)->capture_default_str();
  eval_cmd->add_option("--timeout-ms", ev.timeout_ms)->capture_default_str();
  eval_cmd->add_option("--retries", ev.retries)->capture_default_str();
  eval_cmd->add_option("--backoff-ms", ev.backoff_ms)->capture_default_str();
  eval_cmd->add_option("--max-in-flight", ev.max_in_flight)->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--runs", ev.runs, "judge runs per response")->check(CLI::PositiveNumber)->capture_default_str();
  eval_cmd->add_option("--axes", ev.axes, "enabled axes (default: all)")->delimiter(',');
  eval_cmd->add_option("--weight", ev.weights, "axis=weight override")->delimiter(',');
  eval_cmd->add_option("--model", ev.model, "model name for the summary row")->capture_default_str();

  SimOpts so;
  auto* sim_cmd = app.add_subcommand("simulate", "run the household simulator");
  sim_cmd->add_option("--trace", so.trace, "fig6, conflict_suite or a JSON-lines path")->capture_default_str();
  sim_cmd->add_option("--arch", so.arch)->check(CLI::IsMember({"single", "baseline", "both"}))->capture_default_str();
  sim_cmd->add_option("--policy", so.policy, "policy JSON (default: built in)");
  sim_cmd->add_option("--household", so.household, "household JSON (default: built in)");
  sim_cmd->add_option("--autonomy", so.autonomy, "user=manual|assisted|autonomous")->delimiter(',');

  ReportOpts ro;
  auto* report_cmd = app.add_subcommand("report", "parent daily report or summary table rendering");
  report_cmd->add_option("--parent", ro.parent, "child user id");
  report_cmd->add_option("--trace", ro.trace)->capture_default_str();
  report_cmd->add_option("--day", ro.day, "YYYY-MM-DD (default: day of the first event)");
  report_cmd->add_option("--profile", ro.profile, "child profile JSON (default: household occupant)");
  report_cmd->add_option("--table", ro.table, "summary row JSON or 'agora4b'");

  StatsOpts st;
  auto* stats_cmd = app.add_subcommand("stats", "paired tests and annotator agreement");
  stats_cmd->add_option("--a", st.a, "first sample, one number per line");
  stats_cmd->add_option("--b", st.b, "second sample, one number per line");
  stats_cmd->add_option("--test", st.test)->check(CLI::IsMember({"ttest", "wilcoxon", "all"}))->capture_default_str();
  stats_cmd->add_option("--labels-a", st.labels_a, "annotator A labels, one per line");
  stats_cmd->add_option("--labels-b", st.labels_b, "annotator B labels, one per line");

  std::vector<std::string> argv_store{"hearth"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"error", "ConfigError"}, {"message", e.what()}}.dump() << '\n';
    return kExitConfig;
  }

  try {
    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    const fs::path dir = make_run_dir(g, name);
    write_file(dir / "config.ini", run_config(app, *sub));
    int code = kExitOk;
    if (name == "gen") code = cmd_gen(g, gen, dir, err);
    else if (name == "eval") code = cmd_eval(ev, dir, err);
    else if (name == "simulate") code = cmd_simulate(g, so, dir);
    else if (name == "report") code = cmd_report(g, ro, dir);
    else code = cmd_stats(st, dir);
    out << dir.string() << '\n';
    return code;
  } catch (const Error& e) {
    err << json{{"error", errc_name(e.code())}, {"message", e.what()}}.dump() << '\n';
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    err << json{{"error", "InputError"}, {"message", e.what()}}.dump() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << json{{"error", "InputError"}, {"message", e.what()}}.dump() << '\n';
    return kExitInput;
  }
}

}  // namespace hearth::harness
