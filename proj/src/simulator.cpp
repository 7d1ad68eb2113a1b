#include "hearth/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hearth/embedded_data.hpp"
#include "hearth/heuristics.hpp"
#include "hearth/rng.hpp"
#include "hearth/text.hpp"

namespace hearth::sim {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 8> kIntentNames{"play_media",   "adjust_light", "adjust_volume",
                                                      "shutdown_all", "reminder",     "info_request",
                                                      "emergency_help", "unknown"};

Value value_from_json(const json& v, const std::string& where) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_string()) return v.get<std::string>();
  throw Error(Errc::ConfigError, where + ": device values must be integers or strings");
}

json value_to_json(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
  return std::get<std::string>(v);
}

int parse_hhmm(const std::string& s) {
  int h = 0;
  int m = 0;
  if (std::sscanf(s.c_str(), "%d:%d", &h, &m) != 2 || h < 0 || h > 23 || m < 0 || m > 59) {
    throw Error(Errc::ConfigError, "bad time of day '" + s + "'");
  }
  return h * 60 + m;
}

std::string room_words(const std::string& room) {
  std::string out = room;
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

bool any_phrase(std::string_view text, const std::vector<std::string>& phrases) {
  return std::any_of(phrases.begin(), phrases.end(),
                     [&](const std::string& p) { return text::count_phrase(text, p) > 0; });
}

const std::vector<std::string>& direction(const PolicyConfig& p, const std::string& key) {
  static const std::vector<std::string> kEmpty;
  const auto it = p.directions.find(key);
  return it == p.directions.end() ? kEmpty : it->second;
}

std::int64_t int_attr(const HouseholdState& s, const std::string& device, const std::string& attr,
                      std::int64_t fallback = 0) {
  const auto d = s.devices.find(device);
  if (d == s.devices.end()) return fallback;
  const auto a = d->second.find(attr);
  if (a == d->second.end()) return fallback;
  if (const auto* i = std::get_if<std::int64_t>(&a->second)) return *i;
  return fallback;
}

std::string str_attr(const HouseholdState& s, const std::string& device, const std::string& attr) {
  const auto d = s.devices.find(device);
  if (d == s.devices.end()) return {};
  const auto a = d->second.find(attr);
  if (a == d->second.end()) return {};
  if (const auto* str = std::get_if<std::string>(&a->second)) return *str;
  return {};
}

bool is_rest_intent(const IntentAnalysis& a) {
  return a.intent == Intent::ShutdownAll ||
         ((a.intent == Intent::AdjustVolume || a.intent == Intent::AdjustLight) && a.direction < 0);
}

double effective_weight(const QueryEvent& e, const IntentAnalysis& a, const PolicyConfig& p, bool quiet) {
  const auto it = p.vulnerability_weights.find(e.archetype);
  double w = it == p.vulnerability_weights.end() ? 1.0 : it->second;
  if (quiet && is_rest_intent(a)) w += p.rest_bonus;
  return w;
}

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t at = s.find(from); at != std::string::npos; at = s.find(from, at + to.size())) {
    s.replace(at, from.size(), to);
  }
  return s;
}

// Off value for every device kind that has one.
std::optional<std::pair<std::string, Value>> off_write(const std::string& device) {
  const auto kind = device_kind(device);
  if (kind == "light") return std::pair<std::string, Value>{"brightness", std::int64_t{0}};
  if (kind == "audio" || kind == "tv") return std::pair<std::string, Value>{"power", std::string("off")};
  return std::nullopt;
}

// Candidate commands from the action memory, before any filtering.
std::vector<Command> candidates(const IntentAnalysis& a, const HouseholdState& state, const PolicyConfig& p,
                                std::string& response) {
  std::string key(to_string(a.intent));
  if (a.intent == Intent::PlayMedia && a.video) key = "play_video";
  const auto it = p.action_memory.find(key);
  if (it == p.action_memory.end()) {
    response = p.action_memory.at("unknown").response;
    return {};
  }
  const ActionCandidate& cand = it->second;
  std::vector<Command> out;
  bool missing_device = false;
  for (const auto& t : cand.commands) {
    if (t.device == "*") {
      for (const auto& [device, attrs] : state.devices) {
        if (auto off = off_write(device)) {
          out.push_back({device, off->first, off->second, t.action, p.high_risk_actions.count(t.action) > 0, false});
        }
      }
      continue;
    }
    const std::string device = replace_all(t.device, "{room}", a.room);
    if (!state.devices.count(device)) {
      missing_device = true;
      continue;
    }
    Value value;
    if (const auto* str = std::get_if<std::string>(&t.value)) {
      const std::string& v = *str;
      if (v == "$play_volume") {
        value = p.play_volume;
      } else if (v == "$content") {
        value = a.content;
      } else if (v == "$light_target") {
        const auto cur = int_attr(state, device, "brightness");
        value = a.absolute ? *a.absolute
                           : std::clamp<std::int64_t>(cur + (a.direction >= 0 ? p.light_step : -p.light_step), 0, 100);
      } else if (v == "$volume_target") {
        const auto cur = int_attr(state, device, "volume");
        value = std::clamp<std::int64_t>(cur + (a.direction > 0 ? p.volume_step : -p.volume_step), 0, 100);
      } else {
        value = v;
      }
    } else {
      value = t.value;
    }
    out.push_back({device, t.attribute, value, t.action, p.high_risk_actions.count(t.action) > 0, false});
  }
  if (out.empty() && missing_device) {
    response = fmt::format("There is no matching device in the {}.", room_words(a.room));
    return out;
  }
  response = replace_all(cand.response, "{room}", room_words(a.room));
  response = replace_all(response, "{content}", a.content);
  return out;
}

// Fills "{value}" from the level the decision finally writes.
void render_value(ArbitrationDecision& d) {
  if (d.response.find("{value}") == std::string::npos) return;
  std::string value;
  for (const auto* list : {&d.commands, &d.merged}) {
    for (const auto& c : *list) {
      if (value.empty() && (c.attribute == "brightness" || c.attribute == "volume")) value = to_string(c.value);
    }
  }
  d.response = replace_all(d.response, "{value}", value.empty() ? std::string("the requested level") : value);
}

std::string refusal(const PolicyConfig& p, const QueryEvent& e, const std::vector<std::string>& hits) {
  auto pick = [&](const std::string& key) -> std::string {
    const auto it = p.refusals.find(key);
    return it == p.refusals.end() ? std::string("I can't help with that request.") : it->second;
  };
  if (std::find(hits.begin(), hits.end(), "self_harm") != hits.end()) return pick("self_harm");
  if (e.archetype == Archetype::Child) return pick("child");
  return pick("default");
}

struct WindowWrite {
  Command command;
  std::string user_id;
  bool emergency = false;
  bool safety_hit = false;
};

// Referee shared by both architectures; looks only at what was executed and
// at the resulting state.
std::vector<Violation> referee(const std::vector<WindowWrite>& writes, const HouseholdState& before,
                               const HouseholdState& after, const std::map<std::string, std::string>& rest_rooms,
                               bool quiet, const PolicyConfig& p) {
  std::vector<Violation> out;
  std::set<std::tuple<std::string, std::string, std::string>> seen;
  auto add = [&](std::string kind, const std::string& user, const std::string& device) {
    if (seen.insert({kind, user, device}).second) out.push_back({std::move(kind), user, device});
  };
  for (const auto& w : writes) {
    if (w.safety_hit) add("safety_executed", w.user_id, w.command.device);
  }
  if (!quiet) return out;
  for (const auto& w : writes) {
    if (w.emergency) continue;
    const auto& device = w.command.device;
    const auto kind = device_kind(device);
    if (kind == "audio" && !(w.command.attribute == "power" && to_string(w.command.value) == "off")) {
      if (str_attr(after, device, "power") == "on" && str_attr(after, device, "route") == "speaker" &&
          int_attr(after, device, "volume") > p.quiet_hours.volume_cap) {
        add("quiet_hours_volume", w.user_id, device);
      }
    }
    const auto rest = rest_rooms.find(device_room(device));
    if (rest == rest_rooms.end() || rest->second == w.user_id) continue;
    const bool turns_on = (kind == "audio" || kind == "tv") && w.command.attribute == "power" &&
                          to_string(w.command.value) == "on";
    const bool brightens = kind == "light" && w.command.attribute == "brightness" &&
                           int_attr(after, device, "brightness") > int_attr(before, device, "brightness");
    if (turns_on || brightens) add("rest_disturbance", w.user_id, device);
  }
  return out;
}

bool satisfied(const ArbitrationDecision& d, const IntentAnalysis& a, const QueryEvent& e, const HouseholdState& before,
               const HouseholdState& after) {
  if (d.response.empty()) return false;
  bool ok = true;
  const bool refused = std::any_of(d.flags.begin(), d.flags.end(),
                                   [](const std::string& f) { return f.rfind("safety:", 0) == 0; });
  if (!refused) {
    switch (a.intent) {
      case Intent::PlayMedia: {
        const std::string device = (a.video ? "tv." : "audio.") + a.room;
        ok = after.devices.count(device) && str_attr(after, device, "power") == "on" &&
             str_attr(after, device, "content") == a.content;
        break;
      }
      case Intent::AdjustVolume: {
        const std::string device = "audio." + a.room;
        const auto b = int_attr(before, device, "volume");
        const auto f = int_attr(after, device, "volume");
        ok = after.devices.count(device) &&
             (a.direction > 0 ? f > b || (b == 100 && f == 100)
                              : f < b || b == 0 || str_attr(after, device, "power") == "off");
        break;
      }
      case Intent::AdjustLight: {
        const std::string device = "light." + a.room;
        const auto b = int_attr(before, device, "brightness");
        const auto f = int_attr(after, device, "brightness");
        if (!after.devices.count(device)) ok = false;
        else if (a.absolute) ok = f == *a.absolute;
        else if (a.direction >= 0) ok = f > b || (b == 100 && f == 100);
        else ok = f < b || (b == 0 && f == 0);
        break;
      }
      case Intent::ShutdownAll:
        for (const auto& [device, attrs] : after.devices) {
          if (device_room(device) != a.room) continue;
          const auto kind = device_kind(device);
          if (kind == "light" && int_attr(after, device, "brightness") != 0) ok = false;
          if ((kind == "audio" || kind == "tv") && str_attr(after, device, "power") != "off") ok = false;
        }
        break;
      case Intent::EmergencyHelp:
        ok = d.alert;
        break;
      case Intent::Reminder:
      case Intent::InfoRequest:
        break;
      case Intent::Unknown:
        ok = false;
        break;
    }
  }
  if (ok && e.expected_response) {
    static const auto stop_words = heuristics::default_config().stop_words;
    ok = heuristics::containment(*e.expected_response, d.response, stop_words) >= 0.5;
  }
  return ok;
}

std::string summary(std::string_view s, std::size_t max = 80) {
  std::string out(text::trim(s));
  std::replace(out.begin(), out.end(), '\n', ' ');
  if (out.size() > max) out = out.substr(0, max - 3) + "...";
  return out;
}

json command_json(const Command& c) {
  json j{{"device", c.device}, {"attribute", c.attribute}, {"value", value_to_json(c.value)}, {"action", c.action}};
  if (c.high_risk) j["high_risk"] = true;
  if (c.safety_flagged) j["safety_flagged"] = true;
  return j;
}

json commands_json(const std::vector<Command>& cs) {
  json a = json::array();
  for (const auto& c : cs) a.push_back(command_json(c));
  return a;
}

void apply_write(HouseholdState& state, const Command& c, const std::string& user, std::vector<AppliedWrite>& log) {
  auto& attr = state.devices[c.device][c.attribute];
  log.push_back({c.device, c.attribute, attr, c.value, user});
  attr = c.value;
}

void update_rest(HouseholdState& state, const std::vector<IntentAnalysis>& served, const std::vector<std::string>& users,
                 bool quiet) {
  if (!quiet) return;
  for (std::size_t i = 0; i < served.size(); ++i) {
    if (served[i].intent == Intent::ShutdownAll) state.resting_rooms[served[i].room] = users[i];
  }
}

std::map<std::string, std::string> window_rest_rooms(const HouseholdState& state,
                                                     const std::vector<IntentAnalysis>& analyses,
                                                     const std::vector<QueryEvent>& events, bool quiet) {
  auto rooms = state.resting_rooms;
  if (quiet) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      if (analyses[i].intent == Intent::ShutdownAll) rooms[analyses[i].room] = events[i].user_id;
    }
  }
  return rooms;
}

// Groups event indices by identical timestamp.
std::vector<std::vector<std::size_t>> windows_of(const Trace& trace) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < trace.events.size(); ++i) {
    if (out.empty() || trace.events[out.back().front()].timestamp != trace.events[i].timestamp) out.emplace_back();
    out.back().push_back(i);
  }
  return out;
}

HouseholdState initial_state(const Trace& trace, const HouseholdState& household) {
  HouseholdState state = household;
  for (const auto& [device, attrs] : trace.initial_overrides) {
    for (const auto& [attr, value] : attrs) state.devices[device][attr] = value;
  }
  state.resting_rooms.clear();
  if (!trace.events.empty()) state.clock = trace.events.front().timestamp;
  return state;
}

void log_query(SimulationLog& log, const QueryEvent& e, SimTime at) {
  log.records.push_back({at, e.user_id, EventType::Query,
                         fmt::format("{}: {}", to_string(e.intent), summary(e.text, 60)), std::nullopt, {}});
}

void log_outcome(SimulationLog& log, const DecisionOutcome& o, SimTime at) {
  std::vector<std::string> flags = o.decision.flags;
  if (o.plan.consent_required) flags.push_back("consent_required");
  if (o.violation) flags.push_back("violation");
  log.records.push_back(
      {at, o.decision.user_id, EventType::Response, summary(o.decision.response), o.decision.decision_latency_ms, flags});
  for (const auto& f : o.decision.flags) {
    log.records.push_back({at, o.decision.user_id, EventType::Flag, f, std::nullopt, {f}});
  }
  if (o.decision.alert) {
    log.records.push_back({at, o.decision.user_id, EventType::Alert,
                           fmt::format("alert: {}", o.decision.flags.empty() ? std::string(to_string(o.decision.intent))
                                                                             : text::join(o.decision.flags, ";")),
                           std::nullopt, o.decision.flags});
  }
}

}  // namespace

std::string to_string(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
  return std::get<std::string>(v);
}

std::string_view to_string(Intent intent) { return kIntentNames[static_cast<std::size_t>(intent)]; }

const Occupant* HouseholdState::find(std::string_view user_id) const {
  for (const auto& o : occupants) {
    if (o.profile.user_id == user_id) return &o;
  }
  return nullptr;
}

std::string device_room(std::string_view device) {
  const auto dot = device.find('.');
  return dot == std::string_view::npos ? std::string() : std::string(device.substr(dot + 1));
}

std::string device_kind(std::string_view device) { return std::string(device.substr(0, device.find('.'))); }

bool QuietHours::contains(SimTime t) const {
  const int m = t.minute_of_day();
  if (start_minute == end_minute) return false;
  if (start_minute < end_minute) return m >= start_minute && m < end_minute;
  return m >= start_minute || m < end_minute;
}

HouseholdState household_from_json(const json& j) {
  HouseholdState s;
  try {
    s.rooms = j.at("rooms").get<std::vector<std::string>>();
    for (const auto& r : j.value("shared_rooms", std::vector<std::string>{})) s.shared_rooms.insert(r);
    for (const auto& [device, attrs] : j.at("devices").items()) {
      for (const auto& [attr, value] : attrs.items()) s.devices[device][attr] = value_from_json(value, device);
    }
    for (const auto& o : j.at("occupants")) {
      Occupant occ;
      occ.profile.user_id = o.at("user_id").get<std::string>();
      occ.profile.pseudonym = pseudonym_for(occ.profile.user_id, "household");
      occ.profile.archetype = parse_enum<Archetype>(o.at("archetype").get<std::string>());
      occ.profile.age_band = o.value("age_band", "");
      occ.profile.language = o.value("language", "en");
      occ.profile.autonomy_mode = parse_enum<AutonomyMode>(o.value("autonomy_mode", "assisted"));
      if (o.contains("consent")) {
        const auto& c = o.at("consent");
        occ.profile.consent.data_logging = c.value("data_logging", false);
        if (c.contains("parental_reporting") && !c.at("parental_reporting").is_null()) {
          occ.profile.consent.parental_reporting = c.at("parental_reporting").get<bool>();
        }
      }
      occ.room = o.at("room").get<std::string>();
      if (std::find(s.rooms.begin(), s.rooms.end(), occ.room) == s.rooms.end()) {
        throw Error(Errc::ConfigError, occ.profile.user_id + " is in unknown room " + occ.room);
      }
      s.occupants.push_back(std::move(occ));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("household: ") + e.what());
  }
  return s;
}

HouseholdState default_household() {
  static const HouseholdState s = household_from_json(json::parse(*data::embedded("household.json")));
  return s;
}

json devices_to_json(const std::map<std::string, DeviceState>& devices) {
  json j = json::object();
  for (const auto& [device, attrs] : devices) {
    for (const auto& [attr, value] : attrs) j[device][attr] = value_to_json(value);
  }
  return j;
}

PolicyConfig policy_from_json(const json& j) {
  PolicyConfig p;
  try {
    const auto& q = j.at("quiet_hours");
    p.quiet_hours.start_minute = parse_hhmm(q.at("start").get<std::string>());
    p.quiet_hours.end_minute = parse_hhmm(q.at("end").get<std::string>());
    p.quiet_hours.volume_cap = q.value("volume_cap", p.quiet_hours.volume_cap);
    p.quiet_hours.route = q.value("route", p.quiet_hours.route);
    for (const auto& [name, w] : j.at("vulnerability_weights").items()) {
      p.vulnerability_weights[parse_enum<Archetype>(name)] = w.get<double>();
    }
    p.rest_bonus = j.value("rest_bonus", p.rest_bonus);
    for (const auto& [name, r] : j.at("urgency_rank").items()) p.urgency_rank[parse_enum<Urgency>(name)] = r.get<int>();
    p.starvation_bound = j.value("starvation_bound", p.starvation_bound);
    p.window_capacity = j.value("window_capacity", p.window_capacity);
    p.play_volume = j.value("play_volume", p.play_volume);
    p.volume_step = j.value("volume_step", p.volume_step);
    p.light_step = j.value("light_step", p.light_step);
    if (j.contains("latency")) {
      const auto& l = j.at("latency");
      p.latency_base_ms = l.value("base_ms", p.latency_base_ms);
      p.latency_per_command_ms = l.value("per_command_ms", p.latency_per_command_ms);
      p.latency_jitter_ms = l.value("jitter_ms", p.latency_jitter_ms);
    }
    for (const auto& a : j.value("high_risk_actions", std::vector<std::string>{})) p.high_risk_actions.insert(a);
    for (const auto& [name, words] : j.at("intents").items()) {
      const auto it = std::find(kIntentNames.begin(), kIntentNames.end(), name);
      if (it == kIntentNames.end()) throw Error(Errc::ConfigError, "unknown intent " + name);
      p.intent_keywords[static_cast<Intent>(it - kIntentNames.begin())] = words.get<std::vector<std::string>>();
    }
    for (const auto& [name, words] : j.at("directions").items()) p.directions[name] = words.get<std::vector<std::string>>();
    for (const auto& s : j.at("safety")) {
      SafetyCategory cat{s.at("category").get<std::string>(), {}, s.at("terms").get<std::vector<std::string>>()};
      for (const auto& a : s.at("applies_to")) cat.applies_to.insert(parse_enum<Archetype>(a.get<std::string>()));
      p.safety.push_back(std::move(cat));
    }
    for (const auto& [name, cand] : j.at("action_memory").items()) {
      ActionCandidate c{cand.at("response").get<std::string>(), {}};
      for (const auto& t : cand.at("commands")) {
        c.commands.push_back({t.at("device").get<std::string>(), t.at("attribute").get<std::string>(),
                              value_from_json(t.at("value"), name),
                              t.at("action").get<std::string>()});
      }
      p.action_memory[name] = std::move(c);
    }
    p.refusals = j.value("refusals", std::map<std::string, std::string>{});
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, std::string("policy: ") + e.what());
  }
  validate(p);
  return p;
}

void validate(const PolicyConfig& p) {
  for (std::size_t i = 0; i < kIntentNames.size(); ++i) {
    if (!p.action_memory.count(std::string(kIntentNames[i]))) {
      throw Error(Errc::ConfigError, fmt::format("intent {} has no candidate action", kIntentNames[i]));
    }
  }
  for (const auto a : all_values<Archetype>()) {
    const auto it = p.vulnerability_weights.find(a);
    if (it == p.vulnerability_weights.end() || !(it->second > 0.0)) {
      throw Error(Errc::ConfigError, fmt::format("priority weight for {} must be positive", to_string(a)));
    }
  }
  for (const auto u : all_values<Urgency>()) {
    if (!p.urgency_rank.count(u)) throw Error(Errc::ConfigError, fmt::format("no rank for urgency {}", to_string(u)));
  }
}

PolicyConfig default_policy() {
  static const PolicyConfig p = policy_from_json(json::parse(*data::embedded("policy.json")));
  return p;
}

IntentAnalysis analyze(std::string_view text_in, Archetype archetype, const std::string& room,
                       const HouseholdState& state, const PolicyConfig& p) {
  IntentAnalysis a;
  a.room = room;
  std::size_t best = 0;
  for (const auto& r : state.rooms) {
    const auto words = room_words(r);
    if (words.size() > best && text::count_phrase(text_in, words) > 0) {
      a.room = r;
      best = words.size();
    }
  }
  for (const auto& cat : p.safety) {
    if (cat.applies_to.count(archetype) && any_phrase(text_in, cat.terms)) a.safety_hits.push_back(cat.category);
  }
  auto has = [&](Intent intent) {
    const auto it = p.intent_keywords.find(intent);
    return it != p.intent_keywords.end() && any_phrase(text_in, it->second);
  };
  for (const auto intent : {Intent::EmergencyHelp, Intent::ShutdownAll, Intent::Reminder, Intent::AdjustLight,
                            Intent::AdjustVolume, Intent::PlayMedia, Intent::InfoRequest}) {
    if (has(intent)) {
      a.intent = intent;
      break;
    }
  }
  if (a.intent == Intent::AdjustLight) {
    static const std::regex percent(R"((\d{1,3})\s*(%|percent))");
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(text_in.begin(), text_in.end(), m, percent)) {
      a.absolute = std::clamp<std::int64_t>(std::stoll(m[1].str()), 0, 100);
    } else if (any_phrase(text_in, direction(p, "light_full"))) {
      a.absolute = 100;
    } else if (any_phrase(text_in, direction(p, "light_off"))) {
      a.absolute = 0;
    }
    a.direction = any_phrase(text_in, direction(p, "light_down")) ? -1 : 1;
    if (a.absolute) a.direction = 0;
  } else if (a.intent == Intent::AdjustVolume) {
    a.direction = any_phrase(text_in, direction(p, "volume_down"))  ? -1
                  : any_phrase(text_in, direction(p, "volume_up")) ? 1
                                                                   : -1;
  } else if (a.intent == Intent::PlayMedia) {
    a.video = any_phrase(text_in, direction(p, "video"));
    a.content = a.video ? "video" : "music";
  }
  return a;
}

Trace parse_trace(std::string_view jsonl, const HouseholdState& household, const PolicyConfig& policy) {
  Trace trace;
  std::size_t line_no = 0;
  for (const auto& line : text::split(jsonl, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    auto fail = [&](const std::string& why) { return Error(Errc::MalformedTrace, fmt::format("line {}: {}", line_no, why)); };
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw fail("not a JSON object");
    if (j.contains("initial_state")) {
      if (!trace.events.empty()) throw fail("initial_state must precede events");
      for (const auto& [device, attrs] : j.at("initial_state").items()) {
        if (!household.devices.count(device)) throw fail("unknown device " + device);
        for (const auto& [attr, value] : attrs.items()) {
          try {
            trace.initial_overrides[device][attr] = value_from_json(value, device);
          } catch (const Error& e) {
            throw fail(e.what());
          }
        }
      }
      continue;
    }
    QueryEvent e;
    try {
      e.timestamp = SimTime::parse(j.at("timestamp").get<std::string>());
      e.user_id = j.at("user_id").get<std::string>();
      e.text = j.at("text").get<std::string>();
      if (j.contains("expected_response")) e.expected_response = j.at("expected_response").get<std::string>();
    } catch (const json::exception& ex) {
      throw fail(ex.what());
    } catch (const Error& ex) {
      throw fail(ex.what());
    }
    if (text::trim(e.text).empty()) throw fail("empty text");
    const Occupant* who = household.find(e.user_id);
    if (!who) throw fail("unknown user " + e.user_id);
    e.archetype = who->profile.archetype;
    e.room = j.value("room", who->room);
    if (std::find(household.rooms.begin(), household.rooms.end(), e.room) == household.rooms.end()) {
      throw fail("unknown room " + e.room);
    }
    const IntentAnalysis a = analyze(e.text, e.archetype, e.room, household, policy);
    e.intent = a.intent;
    if (j.contains("urgency")) {
      try {
        e.urgency = parse_enum<Urgency>(j.at("urgency").get<std::string>());
      } catch (const std::exception& ex) {
        throw fail(ex.what());
      }
    } else if (a.intent == Intent::EmergencyHelp) {
      e.urgency = Urgency::Emergency;
    } else if (std::find(a.safety_hits.begin(), a.safety_hits.end(), "self_harm") != a.safety_hits.end()) {
      e.urgency = Urgency::High;
    }
    if (!trace.events.empty() && e.timestamp < trace.events.back().timestamp) throw fail("timestamp goes backwards");
    trace.events.push_back(std::move(e));
  }
  return trace;
}

Trace load_trace(const std::string& path, const HouseholdState& household, const PolicyConfig& policy) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedTrace, "cannot read trace " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_trace(buf.str(), household, policy);
}

Trace fixture_trace(std::string_view name, const HouseholdState& household, const PolicyConfig& policy) {
  const std::string file = name == "fig6" ? "fixtures/fig6_trace.jsonl"
                           : name == "conflict_suite" ? "fixtures/conflict_suite.jsonl"
                                                      : "";
  const auto body = file.empty() ? std::nullopt : data::embedded(file);
  if (!body) throw Error(Errc::MalformedTrace, "unknown trace fixture " + std::string(name));
  return parse_trace(*body, household, policy);
}

std::vector<std::size_t> schedule_order(const std::vector<QueryEvent>& events, const std::vector<std::size_t>& waited,
                                        const PolicyConfig& policy, SimTime now) {
  const bool quiet = policy.quiet_hours.contains(now);
  struct Key {
    bool emergency;
    bool starving;
    int rank;
    double weight;
    std::size_t waited;
  };
  std::vector<Key> keys;
  HouseholdState none;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    IntentAnalysis a;
    a.intent = e.intent;
    a.direction = e.intent == Intent::ShutdownAll ? -1 : 0;
    if (e.intent == Intent::AdjustVolume || e.intent == Intent::AdjustLight) {
      a = analyze(e.text, e.archetype, e.room, none, policy);
    }
    const std::size_t w = i < waited.size() ? waited[i] : 0;
    keys.push_back({e.urgency == Urgency::Emergency, e.urgency != Urgency::Emergency && w >= policy.starvation_bound,
                    policy.urgency_rank.at(e.urgency), effective_weight(e, a, policy, quiet), w});
  }
  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& a = keys[x];
    const auto& b = keys[y];
    if (a.emergency != b.emergency) return a.emergency;
    if (a.starving != b.starving) return a.starving;
    if (a.rank != b.rank) return a.rank > b.rank;
    if (a.weight != b.weight) return a.weight > b.weight;
    if (a.waited != b.waited) return a.waited > b.waited;
    return events[x].user_id < events[y].user_id;
  });
  return order;
}

std::vector<ArbitrationDecision> arbitrate(const std::vector<QueryEvent>& events, const HouseholdState& state,
                                           const PolicyConfig& p, const std::vector<std::size_t>& waited) {
  if (events.empty()) return {};
  const SimTime now = events.front().timestamp;
  for (const auto& e : events) {
    if (e.timestamp != now) throw Error(Errc::Precondition, "arbitrate needs events from a single window");
  }
  const bool quiet = p.quiet_hours.contains(now);
  std::vector<IntentAnalysis> analyses;
  for (const auto& e : events) analyses.push_back(analyze(e.text, e.archetype, e.room, state, p));
  const auto rest_rooms = window_rest_rooms(state, analyses, events, quiet);
  const auto order = schedule_order(events, waited, p, now);

  std::vector<ArbitrationDecision> decisions;
  std::vector<double> weights;
  for (const std::size_t idx : order) {
    const auto& e = events[idx];
    const auto& a = analyses[idx];
    ArbitrationDecision d;
    d.event_index = idx;
    d.user_id = e.user_id;
    d.archetype = e.archetype;
    d.intent = a.intent;
    d.room = a.room;
    d.waited_windows = idx < waited.size() ? waited[idx] : 0;
    std::vector<std::string> why;

    if (!a.safety_hits.empty()) {
      d.response = refusal(p, e, a.safety_hits);
      for (const auto& cat : a.safety_hits) d.flags.push_back("safety:" + cat);
      d.constraints.push_back("safety");
      d.alert = e.archetype == Archetype::Child ||
                std::find(a.safety_hits.begin(), a.safety_hits.end(), "self_harm") != a.safety_hits.end();
      why.push_back(fmt::format("safety: request matched the {} lexicon, no device action taken",
                                text::join(a.safety_hits, "/")));
    } else {
      std::vector<Command> cmds = candidates(a, state, p, d.response);
      if (a.intent == Intent::EmergencyHelp) {
        d.alert = true;
        d.constraints.push_back("emergency");
        why.push_back("emergency: served first, household alerted, quiet hours do not apply");
      } else {
        if (a.intent == Intent::ShutdownAll) {
          std::erase_if(cmds, [&](const Command& c) { return device_room(c.device) != a.room; });
          for (auto& c : cmds) {
            c.action = "room_off";
            c.high_risk = p.high_risk_actions.count(c.action) > 0;
          }
          d.response = fmt::format("Turning everything off in the {}.", room_words(a.room));
          d.constraints.push_back("localized");
          why.push_back(fmt::format("localized: shutdown limited to the {} so other rooms are not affected",
                                    room_words(a.room)));
        }
        if (quiet) {
          bool capped = false;
          for (auto& c : cmds) {
            if (device_kind(c.device) != "audio") continue;
            if (c.attribute == "volume") {
              const auto v = std::get<std::int64_t>(c.value);
              if (v > p.quiet_hours.volume_cap) {
                c.value = p.quiet_hours.volume_cap;
                capped = true;
              }
            } else if (c.attribute == "route" && to_string(c.value) != p.quiet_hours.route) {
              c.value = p.quiet_hours.route;
              capped = true;
            }
          }
          if (capped) {
            d.constraints.push_back("quiet_hours");
            why.push_back(fmt::format("quiet hours: volume capped at {} and routed to the {} speaker",
                                      p.quiet_hours.volume_cap, p.quiet_hours.route));
            d.response += fmt::format(" It is quiet time, so I kept it soft on your {} speaker.", p.quiet_hours.route);
          }
          const std::size_t before = cmds.size();
          std::erase_if(cmds, [&](const Command& c) {
            const auto rest = rest_rooms.find(device_room(c.device));
            if (rest == rest_rooms.end() || rest->second == e.user_id) return false;
            const auto kind = device_kind(c.device);
            const bool turns_on =
                (kind == "audio" || kind == "tv") && c.attribute == "power" && to_string(c.value) == "on";
            const bool brightens = kind == "light" && c.attribute == "brightness" &&
                                   std::get<std::int64_t>(c.value) > int_attr(state, c.device, "brightness");
            return turns_on || brightens;
          });
          if (cmds.size() != before) {
            d.constraints.push_back("rest");
            why.push_back(fmt::format("rest: someone is resting in the {}, so nothing there was switched on",
                                      room_words(a.room)));
            d.response = fmt::format("Someone is resting in the {}, so I left it as it is.", room_words(a.room));
            cmds.clear();
          }
        }
      }
      d.commands = std::move(cmds);
    }
    d.explanation = why.empty() ? "no constraint applied, request carried out as asked" : text::join(why, "; ");
    weights.push_back(effective_weight(e, a, p, quiet));
    decisions.push_back(std::move(d));
  }

  // One write per device attribute: merge competing requests into a single
  // compromise owned by the highest-priority requester.
  std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::size_t, std::size_t>>> proposals;
  for (std::size_t di = 0; di < decisions.size(); ++di) {
    for (std::size_t ci = 0; ci < decisions[di].commands.size(); ++ci) {
      const auto& c = decisions[di].commands[ci];
      proposals[{c.device, c.attribute}].push_back({di, ci});
    }
  }
  std::map<std::size_t, std::set<std::size_t>> moved;  // decision -> command indices moved to merged
  for (const auto& [key, list] : proposals) {
    if (list.size() < 2) continue;
    const auto& [device, attr] = key;
    bool differ = false;
    for (const auto& [di, ci] : list) {
      differ |= decisions[di].commands[ci].value != decisions[list.front().first].commands[list.front().second].value;
    }
    Value merged = decisions[list.front().first].commands[list.front().second].value;
    if (differ && attr == "brightness") {
      double num = 0.0;
      double den = 0.0;
      for (const auto& [di, ci] : list) {
        num += weights[di] * static_cast<double>(std::get<std::int64_t>(decisions[di].commands[ci].value));
        den += weights[di];
      }
      merged = static_cast<std::int64_t>(std::llround(num / den));
    } else if (differ && attr == "volume") {
      std::int64_t lowest = 100;
      for (const auto& [di, ci] : list) lowest = std::min(lowest, std::get<std::int64_t>(decisions[di].commands[ci].value));
      merged = lowest;
    }
    std::vector<std::string> users;
    for (const auto& [di, ci] : list) users.push_back(decisions[di].user_id);
    const std::string note = fmt::format("shared device: {} {} set to {} for {}", device, attr, to_string(merged),
                                         text::join(users, ", "));
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto [di, ci] = list[k];
      auto& d = decisions[di];
      if (d.commands[ci].value != merged) {
        d.response += fmt::format(" Others asked for something different, so I settled on {}.", to_string(merged));
      }
      d.commands[ci].value = merged;
      if (k > 0) moved[di].insert(ci);
      if (std::find(d.constraints.begin(), d.constraints.end(), "shared_device") == d.constraints.end()) {
        d.constraints.push_back("shared_device");
      }
      if (d.explanation.rfind("no constraint", 0) == 0) d.explanation = note;
      else d.explanation += "; " + note;
    }
  }
  for (auto& [di, cis] : moved) {
    auto& d = decisions[di];
    std::vector<Command> keep;
    for (std::size_t ci = 0; ci < d.commands.size(); ++ci) {
      (cis.count(ci) ? d.merged : keep).push_back(d.commands[ci]);
    }
    d.commands = std::move(keep);
  }
  for (auto& d : decisions) {
    render_value(d);
    d.decision_latency_ms =
        p.latency_base_ms + p.latency_per_command_ms * static_cast<double>(d.commands.size() + d.merged.size());
  }
  return decisions;
}

ExecutionPlan apply_autonomy(const ArbitrationDecision& decision, AutonomyMode mode) {
  ExecutionPlan plan;
  for (const auto& c : decision.commands) {
    bool execute = false;
    switch (mode) {
      case AutonomyMode::Manual:
        execute = false;
        break;
      case AutonomyMode::Assisted:
        execute = !c.high_risk && !c.safety_flagged;
        break;
      case AutonomyMode::Autonomous:
        execute = !c.safety_flagged;
        break;
    }
    (execute ? plan.executed : plan.proposed).push_back(c);
  }
  plan.consent_required = !plan.proposed.empty();
  return plan;
}

std::size_t SimulationLog::decision_count() const {
  std::size_t n = 0;
  for (const auto& w : windows) n += w.decisions.size();
  return n;
}

std::size_t SimulationLog::conflict_count() const {
  std::size_t n = 0;
  for (const auto& w : windows) n += w.conflicts.size();
  return n;
}

std::size_t SimulationLog::violation_count() const {
  std::size_t n = 0;
  for (const auto& w : windows) {
    for (const auto& d : w.decisions) n += d.violation ? 1 : 0;
  }
  return n;
}

SimulationLog run_trace(const Trace& trace, const HouseholdState& household, const PolicyConfig& policy,
                        const std::map<std::string, AutonomyMode>& autonomy, std::uint64_t seed) {
  SimulationLog log;
  log.architecture = "single_agent";
  log.seed = seed;
  HouseholdState state = initial_state(trace, household);
  log.initial = state;
  Rng rng(seed);

  auto mode_of = [&](const std::string& user) {
    if (auto it = autonomy.find(user); it != autonomy.end()) return it->second;
    const Occupant* o = state.find(user);
    return o ? o->profile.autonomy_mode : AutonomyMode::Assisted;
  };

  struct Pending {
    QueryEvent event;
    std::size_t waited = 0;
  };
  std::vector<Pending> pending;

  auto run_window = [&](SimTime now) {
    const bool quiet = policy.quiet_hours.contains(now);
    if (!quiet) state.resting_rooms.clear();
    state.clock = now;

    std::vector<QueryEvent> events;
    std::vector<std::size_t> waited;
    for (auto& pe : pending) {
      pe.event.timestamp = now;
      events.push_back(pe.event);
      waited.push_back(pe.waited);
    }
    std::vector<std::size_t> serve_idx;
    std::vector<std::size_t> defer_idx;
    const auto order = schedule_order(events, waited, policy, now);
    for (const std::size_t i : order) {
      const bool room = policy.window_capacity == 0 || serve_idx.size() < policy.window_capacity ||
                        events[i].urgency == Urgency::Emergency;
      (room ? serve_idx : defer_idx).push_back(i);
    }
    std::sort(serve_idx.begin(), serve_idx.end());
    std::vector<QueryEvent> served;
    std::vector<std::size_t> served_waited;
    for (const auto i : serve_idx) {
      served.push_back(events[i]);
      served_waited.push_back(waited[i]);
    }

    WindowRecord window;
    window.time = now;
    const auto t0 = std::chrono::steady_clock::now();
    auto decisions = arbitrate(served, state, policy, served_waited);
    window.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    std::vector<IntentAnalysis> analyses;
    for (const auto& e : served) analyses.push_back(analyze(e.text, e.archetype, e.room, state, policy));
    const auto rest_rooms = window_rest_rooms(state, analyses, served, quiet);
    const HouseholdState before = state;
    std::vector<WindowWrite> writes;
    for (auto& d : decisions) {
      DecisionOutcome o;
      o.plan = apply_autonomy(d, mode_of(d.user_id));
      d.consent_required = o.plan.consent_required;
      for (const auto& c : o.plan.executed) {
        apply_write(state, c, d.user_id, window.writes);
        writes.push_back({c, d.user_id, d.intent == Intent::EmergencyHelp, !analyses[d.event_index].safety_hits.empty()});
      }
      d.decision_latency_ms += static_cast<double>(rng.below(policy.latency_jitter_ms + 1));
      o.served = true;
      o.decision = std::move(d);
      window.decisions.push_back(std::move(o));
    }
    std::vector<std::string> users;
    for (const auto& e : served) users.push_back(e.user_id);
    update_rest(state, analyses, users, quiet);
    window.violations = referee(writes, before, state, rest_rooms, quiet, policy);
    for (auto& o : window.decisions) {
      const auto& e = served[o.decision.event_index];
      o.satisfied = satisfied(o.decision, analyses[o.decision.event_index], e, before, state);
      o.violation = std::any_of(window.violations.begin(), window.violations.end(),
                                [&](const Violation& v) { return v.user_id == o.decision.user_id; });
      log_outcome(log, o, now);
    }

    std::vector<Pending> next;
    for (const auto i : defer_idx) {
      next.push_back({events[i], waited[i] + 1});
      window.deferred_users.push_back(events[i].user_id);
    }
    std::sort(window.deferred_users.begin(), window.deferred_users.end());
    pending = std::move(next);
    window.resting_rooms = state.resting_rooms;
    log.windows.push_back(std::move(window));
  };

  const auto groups = windows_of(trace);
  for (const auto& group : groups) {
    const SimTime now = trace.events[group.front()].timestamp;
    for (const auto i : group) {
      log_query(log, trace.events[i], now);
      pending.push_back({trace.events[i], 0});
    }
    run_window(now);
  }
  // Deferred requests are flushed after the last arrival.
  while (!pending.empty()) run_window(log.windows.back().time);

  log.final_state = state;
  return log;
}

std::map<Archetype, std::string> default_assignment() {
  std::map<Archetype, std::string> out;
  for (const auto a : all_values<Archetype>()) out[a] = "agent-" + std::string(to_string(a));
  return out;
}

SimulationLog run_multi_agent_baseline(const Trace& trace, const HouseholdState& household, const PolicyConfig& policy,
                                       const std::map<Archetype, std::string>& assignment, std::uint64_t seed) {
  for (const auto a : all_values<Archetype>()) {
    if (!assignment.count(a)) {
      throw Error(Errc::Precondition, fmt::format("no sub-agent assigned to {}", to_string(a)));
    }
  }
  SimulationLog log;
  log.architecture = "multi_agent_baseline";
  log.seed = seed;
  HouseholdState state = initial_state(trace, household);
  log.initial = state;
  Rng rng(seed);

  for (const auto& group : windows_of(trace)) {
    const SimTime now = trace.events[group.front()].timestamp;
    const bool quiet = policy.quiet_hours.contains(now);
    if (!quiet) state.resting_rooms.clear();
    state.clock = now;
    WindowRecord window;
    window.time = now;

    std::vector<QueryEvent> events;
    for (const auto i : group) {
      events.push_back(trace.events[i]);
      log_query(log, trace.events[i], now);
    }
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<IntentAnalysis> analyses;
    std::vector<ArbitrationDecision> decisions;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      analyses.push_back(analyze(e.text, e.archetype, e.room, state, policy));
      ArbitrationDecision d;
      d.event_index = i;
      d.user_id = e.user_id;
      d.archetype = e.archetype;
      d.intent = analyses.back().intent;
      d.room = analyses.back().room;
      d.commands = candidates(analyses.back(), state, policy, d.response);
      render_value(d);
      d.alert = d.intent == Intent::EmergencyHelp;
      d.explanation = assignment.at(e.archetype) + " acted alone";
      d.decision_latency_ms = policy.latency_base_ms + policy.latency_per_command_ms * static_cast<double>(d.commands.size());
      decisions.push_back(std::move(d));
    }
    // Sub-agents race: their writes land in a seeded order.
    std::vector<std::size_t> order(decisions.size());
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);
    window.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    const auto rest_rooms = window_rest_rooms(state, analyses, events, quiet);
    const HouseholdState before = state;
    std::vector<WindowWrite> writes;
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<std::string, Value>>> touched;
    for (const auto i : order) {
      const auto& d = decisions[i];
      for (const auto& c : d.commands) {
        apply_write(state, c, d.user_id, window.writes);
        writes.push_back({c, d.user_id, d.intent == Intent::EmergencyHelp, !analyses[i].safety_hits.empty()});
        touched[{c.device, c.attribute}].push_back({d.user_id, c.value});
      }
    }
    for (const auto& [key, props] : touched) {
      std::set<std::string> users;
      bool differ = false;
      for (const auto& [user, value] : props) {
        users.insert(user);
        differ |= value != props.front().second;
      }
      if (users.size() > 1 && differ) window.conflicts.push_back({key.first, key.second, props, props.back().second});
    }
    std::vector<std::string> users;
    for (const auto& e : events) users.push_back(e.user_id);
    update_rest(state, analyses, users, quiet);
    window.violations = referee(writes, before, state, rest_rooms, quiet, policy);
    for (const auto i : order) {
      DecisionOutcome o;
      o.decision = decisions[i];
      o.decision.decision_latency_ms += static_cast<double>(rng.below(policy.latency_jitter_ms + 1));
      o.plan.executed = o.decision.commands;
      o.served = true;
      o.satisfied = satisfied(o.decision, analyses[i], events[i], before, state);
      o.violation = std::any_of(window.violations.begin(), window.violations.end(),
                                [&](const Violation& v) { return v.user_id == o.decision.user_id; });
      log_outcome(log, o, now);
      window.decisions.push_back(std::move(o));
    }
    window.resting_rooms = state.resting_rooms;
    log.windows.push_back(std::move(window));
  }
  log.final_state = state;
  return log;
}

HouseholdState replay(const SimulationLog& log) {
  HouseholdState state = log.initial;
  for (const auto& w : log.windows) {
    for (const auto& write : w.writes) {
      auto& attr = state.devices[write.device][write.attribute];
      if (attr != write.before) {
        throw Error(Errc::MalformedTrace, fmt::format("replay diverged at {} {}", write.device, write.attribute));
      }
      attr = write.after;
    }
    state.clock = w.time;
    state.resting_rooms = w.resting_rooms;
  }
  return state;
}

std::string to_jsonl(const SimulationLog& log, bool include_wall) {
  std::string out;
  for (const auto& w : log.windows) {
    json decisions = json::array();
    for (const auto& o : w.decisions) {
      const auto& d = o.decision;
      decisions.push_back({{"user_id", d.user_id},
                           {"archetype", to_string(d.archetype)},
                           {"intent", to_string(d.intent)},
                           {"room", d.room},
                           {"response", d.response},
                           {"commands", commands_json(d.commands)},
                           {"merged", commands_json(d.merged)},
                           {"executed", commands_json(o.plan.executed)},
                           {"proposed", commands_json(o.plan.proposed)},
                           {"explanation", d.explanation},
                           {"constraints", d.constraints},
                           {"consent_required", d.consent_required},
                           {"flags", d.flags},
                           {"alert", d.alert},
                           {"latency_ms", d.decision_latency_ms},
                           {"waited_windows", d.waited_windows},
                           {"served", o.served},
                           {"satisfied", o.satisfied},
                           {"violation", o.violation}});
    }
    json writes = json::array();
    for (const auto& wr : w.writes) {
      writes.push_back({{"device", wr.device},
                        {"attribute", wr.attribute},
                        {"before", value_to_json(wr.before)},
                        {"after", value_to_json(wr.after)},
                        {"user_id", wr.user_id}});
    }
    json conflicts = json::array();
    for (const auto& c : w.conflicts) {
      json props = json::array();
      for (const auto& [user, value] : c.proposals) props.push_back({{"user_id", user}, {"value", value_to_json(value)}});
      conflicts.push_back({{"device", c.device}, {"attribute", c.attribute}, {"proposals", props},
                           {"winner", value_to_json(c.winner)}});
    }
    json violations = json::array();
    for (const auto& v : w.violations) {
      violations.push_back({{"kind", v.kind}, {"user_id", v.user_id}, {"device", v.device}});
    }
    json j{{"architecture", log.architecture}, {"time", w.time.iso()},     {"decisions", decisions},
           {"writes", writes},                 {"conflicts", conflicts},   {"violations", violations},
           {"deferred_users", w.deferred_users}, {"resting_rooms", w.resting_rooms}};
    if (include_wall) j["wall_ms"] = w.wall_ms;
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::string episodic_csv(const SimulationLog& log) {
  std::string out(kEpisodicCsvHeader);
  out += '\n';
  for (const auto& r : log.records) {
    out += to_csv_row(r);
    out += '\n';
  }
  return out;
}

ParentReport parent_report(const SimulationLog& log, const UserProfile& child, SimTime day) {
  if (!child.consent.parental_reporting.value_or(false)) {
    throw Error(Errc::NoConsent, child.user_id + " has no parental reporting consent");
  }
  ParentReport report;
  report.child_id = child.user_id;
  const SimTime start = day.day_start();
  report.generated_at = start.plus_seconds(21 * 3600);
  auto in_day = [&](SimTime t) { return t >= start && t <= report.generated_at; };
  for (const auto& w : log.windows) {
    if (!in_day(w.time)) continue;
    for (const auto& o : w.decisions) {
      if (o.decision.user_id != child.user_id) continue;
      ++report.categories[std::string(to_string(o.decision.intent))];
      for (const auto& f : o.decision.flags) report.flags.push_back(f);
    }
  }
  for (const auto& r : log.records) {
    if (r.user_id != child.user_id || !in_day(r.timestamp)) continue;
    if (r.event_type == EventType::Query) ++report.query_count;
    if (r.event_type == EventType::Alert) report.alerts.push_back(r);
  }
  report.record = {report.generated_at, child.user_id, EventType::Report,
                   fmt::format("daily report: {} queries, {} flags, {} alerts", report.query_count, report.flags.size(),
                               report.alerts.size()),
                   std::nullopt, report.flags};
  return report;
}

json to_json(const ParentReport& r) {
  json alerts = json::array();
  for (const auto& a : r.alerts) {
    alerts.push_back({{"timestamp", a.timestamp.iso()}, {"summary", a.payload_summary}, {"flags", a.flags}});
  }
  return {{"child_id", r.child_id},
          {"generated_at", r.generated_at.iso()},
          {"query_count", r.query_count},
          {"categories", r.categories},
          {"flags", r.flags},
          {"alerts", alerts}};
}

}  // namespace hearth::sim
