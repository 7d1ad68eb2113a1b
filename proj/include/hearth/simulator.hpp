#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hearth/core.hpp"

namespace hearth::sim {

// Device attributes are integers (brightness, volume, setpoint) or tags
// (power, content, route).
using Value = std::variant<std::int64_t, std::string>;
std::string to_string(const Value& v);
using DeviceState = std::map<std::string, Value>;

struct Occupant {
  UserProfile profile;
  std::string room;

  friend bool operator==(const Occupant&, const Occupant&) = default;
};

struct HouseholdState {
  std::vector<std::string> rooms;
  std::set<std::string> shared_rooms;
  std::map<std::string, DeviceState> devices;  // "light.kitchen" -> {brightness: 40}
  std::vector<Occupant> occupants;
  std::map<std::string, std::string> resting_rooms;  // room -> user who asked for rest
  SimTime clock;

  const Occupant* find(std::string_view user_id) const;

  friend bool operator==(const HouseholdState&, const HouseholdState&) = default;
};

// "light.kitchen" -> "kitchen"; "audio.living_room" -> "living_room".
std::string device_room(std::string_view device);
std::string device_kind(std::string_view device);

HouseholdState household_from_json(const nlohmann::json& j);
HouseholdState default_household();
nlohmann::json devices_to_json(const std::map<std::string, DeviceState>& devices);

enum class Intent { PlayMedia, AdjustLight, AdjustVolume, ShutdownAll, Reminder, InfoRequest, EmergencyHelp, Unknown };
std::string_view to_string(Intent intent);

struct QuietHours {
  int start_minute = 22 * 60;
  int end_minute = 7 * 60;
  std::int64_t volume_cap = 25;
  std::string route = "personal";

  bool contains(SimTime t) const;
};

struct CommandTemplate {
  std::string device;     // may contain {room}; "*" = every device
  std::string attribute;  // "$off" = power/brightness off for the device kind
  Value value;            // literal or "$play_volume", "$content", "$light_target", "$volume_target", "$off"
  std::string action;
};

struct ActionCandidate {
  std::string response;
  std::vector<CommandTemplate> commands;
};

struct SafetyCategory {
  std::string category;
  std::set<Archetype> applies_to;
  std::vector<std::string> terms;
};

struct PolicyConfig {
  QuietHours quiet_hours;
  std::map<Archetype, double> vulnerability_weights;
  double rest_bonus = 1.0;
  std::map<Urgency, int> urgency_rank;
  std::size_t starvation_bound = 2;
  std::size_t window_capacity = 0;  // 0 = serve every event in its window
  std::int64_t play_volume = 50;
  std::int64_t volume_step = 30;
  std::int64_t light_step = 30;
  double latency_base_ms = 140.0;
  double latency_per_command_ms = 12.0;
  std::uint64_t latency_jitter_ms = 60;
  std::set<std::string> high_risk_actions;
  std::map<Intent, std::vector<std::string>> intent_keywords;
  std::map<std::string, std::vector<std::string>> directions;
  std::vector<SafetyCategory> safety;
  std::map<std::string, ActionCandidate> action_memory;  // keyed by intent name plus "play_video"
  std::map<std::string, std::string> refusals;
};

// Throws Error(ConfigError) when an intent lacks a candidate or a priority
// weight is not strictly positive.
PolicyConfig policy_from_json(const nlohmann::json& j);
PolicyConfig default_policy();
void validate(const PolicyConfig& policy);

struct QueryEvent {
  SimTime timestamp;
  std::string user_id;
  std::string text;
  Archetype archetype = Archetype::TypicalAdult;
  Urgency urgency = Urgency::Medium;
  Intent intent = Intent::Unknown;
  std::string room;
  std::optional<std::string> expected_response;
};

struct IntentAnalysis {
  Intent intent = Intent::Unknown;
  std::string room;
  int direction = 0;  // +1 up, -1 down
  std::optional<std::int64_t> absolute;
  bool video = false;
  std::string content = "music";
  std::vector<std::string> safety_hits;  // category names
};

// Keyword analyzer: emergency > shutdown > reminder > light > volume > media
// > info > unknown. The target room is an explicitly named room or `room`.
IntentAnalysis analyze(std::string_view text, Archetype archetype, const std::string& room,
                       const HouseholdState& state, const PolicyConfig& policy);

struct Trace {
  std::vector<QueryEvent> events;
  std::map<std::string, DeviceState> initial_overrides;
};

// JSON-lines trace. An optional {"initial_state": {...}} line overrides
// device attributes; every other line is {"timestamp", "user_id", "text",
// optional "room", "urgency", "expected_response"}. Throws
// Error(MalformedTrace) on unknown users, bad fields or decreasing
// timestamps.
Trace parse_trace(std::string_view jsonl, const HouseholdState& household, const PolicyConfig& policy);
Trace load_trace(const std::string& path, const HouseholdState& household, const PolicyConfig& policy);
// "fig6" or "conflict_suite".
Trace fixture_trace(std::string_view name, const HouseholdState& household, const PolicyConfig& policy);

struct Command {
  std::string device;
  std::string attribute;
  Value value;
  std::string action;
  bool high_risk = false;
  bool safety_flagged = false;

  friend bool operator==(const Command&, const Command&) = default;
};

struct ArbitrationDecision {
  std::size_t event_index = 0;  // index into the window's event list
  std::string user_id;
  Archetype archetype = Archetype::TypicalAdult;
  Intent intent = Intent::Unknown;
  std::string room;
  std::string response;
  // Writes this decision executes. A write merged with other users' requests
  // is owned by the highest-priority requester and listed under `merged` for
  // the rest.
  std::vector<Command> commands;
  std::vector<Command> merged;
  std::string explanation;
  std::vector<std::string> constraints;  // constraint codes that shaped the decision
  bool consent_required = false;
  std::vector<std::string> flags;
  double decision_latency_ms = 0.0;
  std::size_t waited_windows = 0;
  bool alert = false;  // raise an immediate Alert record
};

// Priority order of the events: urgency, then vulnerability weight (rest
// intents in quiet hours get a bonus), then windows waited, then user id.
// Events that have waited at least starvation_bound windows jump ahead of
// every non-emergency event.
std::vector<std::size_t> schedule_order(const std::vector<QueryEvent>& events, const std::vector<std::size_t>& waited,
                                        const PolicyConfig& policy, SimTime now);

// Single-agent arbitration of one concurrency window. Decisions are returned
// in schedule order, one per event.
std::vector<ArbitrationDecision> arbitrate(const std::vector<QueryEvent>& events, const HouseholdState& state,
                                           const PolicyConfig& policy, const std::vector<std::size_t>& waited = {});

struct ExecutionPlan {
  std::vector<Command> executed;
  std::vector<Command> proposed;  // awaiting the user's confirmation
  bool consent_required = false;
};

// Manual: propose only. Assisted: execute low-risk, ask for high-risk.
// Autonomous: execute all but safety-flagged commands.
ExecutionPlan apply_autonomy(const ArbitrationDecision& decision, AutonomyMode mode);

struct AppliedWrite {
  std::string device;
  std::string attribute;
  Value before;
  Value after;
  std::string user_id;

  friend bool operator==(const AppliedWrite&, const AppliedWrite&) = default;
};

struct CoordinationConflict {
  std::string device;
  std::string attribute;
  std::vector<std::pair<std::string, Value>> proposals;  // user -> value, in write order
  Value winner;
};

struct Violation {
  std::string kind;  // quiet_hours_volume, rest_disturbance, safety_executed
  std::string user_id;
  std::string device;
};

struct DecisionOutcome {
  ArbitrationDecision decision;
  ExecutionPlan plan;
  bool served = false;
  bool satisfied = false;
  bool violation = false;
};

struct WindowRecord {
  SimTime time;
  std::vector<DecisionOutcome> decisions;
  std::vector<AppliedWrite> writes;
  std::vector<CoordinationConflict> conflicts;
  std::vector<Violation> violations;
  std::vector<std::string> deferred_users;
  std::map<std::string, std::string> resting_rooms;  // rest markers after the window
  double wall_ms = 0.0;  // measured arbitration time
};

struct SimulationLog {
  std::string architecture;  // single_agent or multi_agent_baseline
  std::uint64_t seed = 0;
  HouseholdState initial;
  HouseholdState final_state;
  std::vector<WindowRecord> windows;
  std::vector<EpisodicRecord> records;

  std::size_t decision_count() const;
  std::size_t conflict_count() const;
  std::size_t violation_count() const;
};

// Single-agent event loop. `autonomy` overrides per-user modes from the
// occupant profiles.
SimulationLog run_trace(const Trace& trace, const HouseholdState& household, const PolicyConfig& policy,
                        const std::map<std::string, AutonomyMode>& autonomy, std::uint64_t seed);

// Independent per-archetype agents proposing candidate writes with no shared
// filter or scheduler, applied in a seeded order (last write wins).
SimulationLog run_multi_agent_baseline(const Trace& trace, const HouseholdState& household,
                                       const PolicyConfig& policy,
                                       const std::map<Archetype, std::string>& assignment, std::uint64_t seed);

std::map<Archetype, std::string> default_assignment();

// Applies the logged writes, clock and rest markers to the initial state.
// Throws Error(MalformedTrace) when a write's `before` does not match.
HouseholdState replay(const SimulationLog& log);

// One JSON object per window. Wall-clock fields are omitted when
// include_wall is false so logs can be compared byte for byte.
std::string to_jsonl(const SimulationLog& log, bool include_wall = true);
std::string episodic_csv(const SimulationLog& log);

struct ParentReport {
  std::string child_id;
  SimTime generated_at;
  std::size_t query_count = 0;
  std::map<std::string, std::size_t> categories;  // intent -> count
  std::vector<std::string> flags;
  std::vector<EpisodicRecord> alerts;  // at their original timestamps
  EpisodicRecord record;               // the 21:00 Report record
};

// Throws Error(NoConsent) unless the child's parental_reporting consent is true.
ParentReport parent_report(const SimulationLog& log, const UserProfile& child, SimTime day);
nlohmann::json to_json(const ParentReport& report);

}  // namespace hearth::sim
