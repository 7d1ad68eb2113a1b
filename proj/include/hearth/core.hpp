#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hearth/enums.hpp"
#include "hearth/sim_time.hpp"

namespace hearth {

// Fixed-size table indexed by Axis.
template <typename T>
class AxisMap {
 public:
  AxisMap() = default;
  explicit AxisMap(const T& fill) { values_.fill(fill); }

  T& operator[](Axis axis) { return values_[enum_index(axis)]; }
  const T& operator[](Axis axis) const { return values_[enum_index(axis)]; }

  auto begin() { return values_.begin(); }
  auto end() { return values_.end(); }
  auto begin() const { return values_.begin(); }
  auto end() const { return values_.end(); }

  friend bool operator==(const AxisMap&, const AxisMap&) = default;

 private:
  std::array<T, kAxisCount> values_{};
};

inline constexpr std::array<Axis, kAxisCount> kAllAxes = all_values<Axis>();

struct AgeBand {
  int min_age;
  int max_age;  // inclusive
};

// Child 6-17, Elderly 65+, everyone else 18-64.
AgeBand age_band(Archetype archetype);

struct ScenarioEntry {
  std::string id;
  Archetype archetype = Archetype::TypicalAdult;
  int age = 30;
  std::string query;
  Category category = Category::DailyTasks;
  Urgency urgency = Urgency::Low;
  std::string expected_response;
  std::vector<std::string> constraints;
  std::string language = "en";
  std::optional<std::string> concurrent_group;

  friend bool operator==(const ScenarioEntry&, const ScenarioEntry&) = default;
};

struct AgentResponse {
  std::string entry_id;
  std::string text;
  double latency_ms = 0.0;
  Producer producer = Producer::External;

  friend bool operator==(const AgentResponse&, const AgentResponse&) = default;
};

struct Consent {
  bool data_logging = false;
  std::optional<bool> parental_reporting;

  friend bool operator==(const Consent&, const Consent&) = default;
};

struct UserProfile {
  std::string user_id;
  std::string pseudonym;
  Archetype archetype = Archetype::TypicalAdult;
  std::string age_band;
  std::string language = "en";
  AutonomyMode autonomy_mode = AutonomyMode::Assisted;
  std::map<std::string, std::string> preferences;
  Consent consent;

  friend bool operator==(const UserProfile&, const UserProfile&) = default;
};

struct EpisodicRecord {
  SimTime timestamp;
  std::string user_id;
  EventType event_type = EventType::Query;
  std::string payload_summary;
  std::optional<double> latency_ms;
  std::vector<std::string> flags;

  friend bool operator==(const EpisodicRecord&, const EpisodicRecord&) = default;
};

struct ValidationResult {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

// Checks every entry invariant and reports all violations, never just the first.
ValidationResult validate_entry(const ScenarioEntry& entry);

// Cross-entry checks: unique ids and archetype-diverse concurrent groups.
ValidationResult validate_batch(const std::vector<ScenarioEntry>& batch);

ValidationResult validate_profile(const UserProfile& profile);

bool is_language_tag(std::string_view tag);

// Returns a copy whose pseudonym is a readable nickname derived from
// HMAC-SHA256(salt, user_id). Throws Error(EmptySalt).
UserProfile pseudonymize(const UserProfile& profile, std::string_view salt);
std::string pseudonym_for(std::string_view user_id, std::string_view salt);

// JSON (snake_case field names).
void to_json(nlohmann::json& j, const ScenarioEntry& entry);
void from_json(const nlohmann::json& j, ScenarioEntry& entry);
void to_json(nlohmann::json& j, const AgentResponse& response);
void from_json(const nlohmann::json& j, AgentResponse& response);
void to_json(nlohmann::json& j, const UserProfile& profile);
void from_json(const nlohmann::json& j, UserProfile& profile);

// CSV columns: timestamp,user_id,event_type,payload_summary,latency_ms,flags
// (flags joined with ';').
inline constexpr std::string_view kEpisodicCsvHeader =
    "timestamp,user_id,event_type,payload_summary,latency_ms,flags";
std::string to_csv_row(const EpisodicRecord& record);
EpisodicRecord parse_csv_row(std::string_view row);

}  // namespace hearth
