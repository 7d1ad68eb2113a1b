#include "hearth/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <regex>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "hearth/text.hpp"

namespace hearth {

using nlohmann::json;

std::string_view axis_label(Axis axis) {
  static constexpr std::array<std::string_view, kAxisCount> kLabels{
      "Response Accuracy",       "Trust and Safety",        "User Adaptation",
      "Clarity and Tone",        "Concurrency Handling",    "Hallucination Detection",
      "Relevance and Coherence", "Linguistic Quality"};
  return kLabels[enum_index(axis)];
}

AgeBand age_band(Archetype archetype) {
  switch (archetype) {
    case Archetype::Child:
      return {6, 17};
    case Archetype::Elderly:
      return {65, 120};
    case Archetype::Neurodivergent:
    case Archetype::TypicalAdult:
      break;
  }
  return {18, 64};
}

bool is_language_tag(std::string_view tag) {
  static const std::regex kTag(R"(^[A-Za-z]{2,3}(-[A-Za-z0-9]{1,8})*$)");
  return std::regex_match(tag.begin(), tag.end(), kTag);
}

ValidationResult validate_entry(const ScenarioEntry& entry) {
  ValidationResult result;
  auto& v = result.violations;
  if (text::trim(entry.id).empty()) v.emplace_back("id empty");
  const AgeBand band = age_band(entry.archetype);
  if (entry.age < band.min_age || entry.age > band.max_age) {
    v.emplace_back("age outside archetype band");
  }
  if (text::trim(entry.query).empty()) v.emplace_back("query empty");
  if (text::trim(entry.expected_response).empty()) v.emplace_back("expected_response empty");
  if (static_cast<std::size_t>(entry.category) >= enum_count<Category>()) {
    v.emplace_back("category invalid");
  }
  if (static_cast<std::size_t>(entry.urgency) >= enum_count<Urgency>()) {
    v.emplace_back("urgency invalid");
  }
  if (entry.urgency == Urgency::Emergency && entry.category != Category::Emergencies) {
    v.emplace_back("emergency urgency outside emergencies category");
  }
  if (!is_language_tag(entry.language)) v.emplace_back("language tag malformed");
  if (entry.concurrent_group && text::trim(*entry.concurrent_group).empty()) {
    v.emplace_back("concurrent_group empty");
  }
  return result;
}

ValidationResult validate_batch(const std::vector<ScenarioEntry>& batch) {
  ValidationResult result;
  std::set<std::string> ids;
  std::map<std::string, std::set<Archetype>> group_archetypes;
  for (const auto& entry : batch) {
    for (const auto& violation : validate_entry(entry).violations) {
      result.violations.push_back(entry.id + ": " + violation);
    }
    if (!ids.insert(entry.id).second) result.violations.push_back(entry.id + ": duplicate id");
    if (entry.concurrent_group) group_archetypes[*entry.concurrent_group].insert(entry.archetype);
  }
  for (const auto& [group, archetypes] : group_archetypes) {
    if (archetypes.size() < 2) {
      result.violations.push_back(group + ": concurrent group lacks distinct archetypes");
    }
  }
  return result;
}

ValidationResult validate_profile(const UserProfile& profile) {
  ValidationResult result;
  if (profile.user_id.empty()) result.violations.emplace_back("user_id empty");
  if (profile.pseudonym == profile.user_id) result.violations.emplace_back("pseudonym equals user_id");
  if (profile.archetype == Archetype::Child && !profile.consent.parental_reporting.has_value()) {
    result.violations.emplace_back("child profile lacks parental_reporting consent");
  }
  if (!is_language_tag(profile.language)) result.violations.emplace_back("language tag malformed");
  return result;
}

namespace {

constexpr std::array<std::string_view, 64> kAdjectives{
    "amber",  "bold",   "brave",  "bright", "calm",   "clever", "cosy",   "crisp",
    "curly",  "dapper", "eager",  "fancy",  "fluffy", "gentle", "giddy",  "glad",
    "golden", "grand",  "happy",  "hardy",  "hazel",  "humble", "jolly",  "keen",
    "kind",   "lively", "lucky",  "mellow", "merry",  "misty",  "modest", "nimble",
    "noble",  "perky",  "plucky", "polite", "proud",  "quick",  "quiet",  "rosy",
    "rusty",  "sandy",  "shiny",  "silver", "sleepy", "snappy", "snowy",  "sunny",
    "swift",  "tidy",   "tiny",   "trusty", "velvet", "vivid",  "warm",   "wavy",
    "wily",   "windy",  "wise",   "witty",  "woolly", "young",  "zany",   "zesty"};

constexpr std::array<std::string_view, 64> kAnimals{
    "badger",  "bear",    "beaver",  "bison",   "bobcat",  "camel",   "cat",     "cheetah",
    "crane",   "crow",    "deer",    "dingo",   "dolphin", "dove",    "duck",    "eagle",
    "egret",   "falcon",  "ferret",  "finch",   "fox",     "gecko",   "goose",   "hare",
    "hawk",    "hedgehog", "heron",  "ibis",    "jay",     "koala",   "lark",    "lemur",
    "lion",    "llama",   "lynx",    "magpie",  "marten",  "mole",    "moose",   "newt",
    "otter",   "owl",     "panda",   "parrot",  "pelican", "puffin",  "quail",   "rabbit",
    "raven",   "robin",   "salmon",  "seal",    "shrew",   "sparrow", "stoat",   "swan",
    "tapir",   "tiger",   "toad",    "turtle",  "walrus",  "wolf",    "wombat",  "wren"};

}  // namespace

std::string pseudonym_for(std::string_view user_id, std::string_view salt) {
  if (salt.empty()) throw Error(Errc::EmptySalt, "pseudonymization salt must be non-empty");
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  HMAC(EVP_sha256(), salt.data(), static_cast<int>(salt.size()),
       reinterpret_cast<const unsigned char*>(user_id.data()), user_id.size(), digest.data(), &len);
  // 6 + 6 + 32 bits: adjective, animal, then eight hex digits.
  const auto adjective = kAdjectives[digest[0] & 0x3F];
  const auto animal = kAnimals[digest[1] & 0x3F];
  std::string nickname = fmt::format("{}-{}-{:02x}{:02x}{:02x}{:02x}", adjective, animal, digest[2],
                                     digest[3], digest[4], digest[5]);
  if (nickname == user_id) nickname += "-x";
  return nickname;
}

UserProfile pseudonymize(const UserProfile& profile, std::string_view salt) {
  UserProfile out = profile;
  out.pseudonym = pseudonym_for(profile.user_id, salt);
  return out;
}

void to_json(json& j, const ScenarioEntry& e) {
  j = json{{"id", e.id},
           {"archetype", to_string(e.archetype)},
           {"age", e.age},
           {"query", e.query},
           {"category", to_string(e.category)},
           {"urgency", to_string(e.urgency)},
           {"expected_response", e.expected_response},
           {"constraints", e.constraints},
           {"language", e.language},
           {"concurrent_group", e.concurrent_group ? json(*e.concurrent_group) : json(nullptr)}};
}

void from_json(const json& j, ScenarioEntry& e) {
  e.id = j.at("id").get<std::string>();
  e.archetype = parse_enum<Archetype>(j.at("archetype").get<std::string>());
  e.age = j.at("age").get<int>();
  e.query = j.at("query").get<std::string>();
  e.category = parse_enum<Category>(j.at("category").get<std::string>());
  e.urgency = parse_enum<Urgency>(j.at("urgency").get<std::string>());
  e.expected_response = j.at("expected_response").get<std::string>();
  e.constraints = j.value("constraints", std::vector<std::string>{});
  e.language = j.value("language", std::string("en"));
  e.concurrent_group.reset();
  if (const auto it = j.find("concurrent_group"); it != j.end() && !it->is_null()) {
    e.concurrent_group = it->get<std::string>();
  }
}

void to_json(json& j, const AgentResponse& r) {
  j = json{{"entry_id", r.entry_id},
           {"text", r.text},
           {"latency_ms", r.latency_ms},
           {"producer", to_string(r.producer)}};
}

void from_json(const json& j, AgentResponse& r) {
  r.entry_id = j.at("entry_id").get<std::string>();
  r.text = j.at("text").get<std::string>();
  r.latency_ms = j.value("latency_ms", 0.0);
  r.producer = parse_enum<Producer>(j.value("producer", std::string("external")));
  if (!(r.latency_ms >= 0.0)) throw Error(Errc::ParseError, "latency_ms must be non-negative");
}

void to_json(json& j, const UserProfile& p) {
  j = json{{"user_id", p.user_id},
           {"pseudonym", p.pseudonym},
           {"archetype", to_string(p.archetype)},
           {"age_band", p.age_band},
           {"language", p.language},
           {"autonomy_mode", to_string(p.autonomy_mode)},
           {"preferences", p.preferences},
           {"consent",
            {{"data_logging", p.consent.data_logging},
             {"parental_reporting", p.consent.parental_reporting ? json(*p.consent.parental_reporting)
                                                                 : json(nullptr)}}}};
}

void from_json(const json& j, UserProfile& p) {
  p.user_id = j.at("user_id").get<std::string>();
  p.pseudonym = j.at("pseudonym").get<std::string>();
  p.archetype = parse_enum<Archetype>(j.at("archetype").get<std::string>());
  p.age_band = j.value("age_band", std::string{});
  p.language = j.value("language", std::string("en"));
  p.autonomy_mode = parse_enum<AutonomyMode>(j.value("autonomy_mode", std::string("assisted")));
  p.preferences = j.value("preferences", std::map<std::string, std::string>{});
  p.consent = Consent{};
  if (const auto it = j.find("consent"); it != j.end()) {
    p.consent.data_logging = it->value("data_logging", false);
    if (const auto pr = it->find("parental_reporting"); pr != it->end() && !pr->is_null()) {
      p.consent.parental_reporting = pr->get<bool>();
    }
  }
}

std::string to_csv_row(const EpisodicRecord& r) {
  std::vector<std::string> fields{
      r.timestamp.iso(),
      text::csv_field(r.user_id),
      std::string(to_string(r.event_type)),
      text::csv_field(r.payload_summary),
      r.latency_ms ? fmt::format("{}", *r.latency_ms) : std::string{},
      text::csv_field(text::join(r.flags, ";")),
  };
  return text::join(fields, ",");
}

EpisodicRecord parse_csv_row(std::string_view row) {
  const auto fields = text::parse_csv_record(row);
  if (fields.size() != 6) {
    throw Error(Errc::ParseError, fmt::format("episodic row has {} fields, expected 6", fields.size()));
  }
  EpisodicRecord r;
  r.timestamp = SimTime::parse(fields[0]);
  r.user_id = fields[1];
  r.event_type = parse_enum<EventType>(fields[2]);
  r.payload_summary = fields[3];
  if (!fields[4].empty()) {
    try {
      std::size_t used = 0;
      r.latency_ms = std::stod(fields[4], &used);
      if (used != fields[4].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(Errc::ParseError, "bad latency_ms '" + fields[4] + "'");
    }
  }
  if (!fields[5].empty()) r.flags = text::split(fields[5], ';');
  return r;
}

}  // namespace hearth
