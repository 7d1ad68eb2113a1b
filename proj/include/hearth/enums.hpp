#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>

#include "hearth/error.hpp"

namespace hearth {

enum class Archetype { Child, Elderly, Neurodivergent, TypicalAdult };
enum class Category { DailyTasks, Education, Entertainment, Health, Emergencies };
enum class Urgency { Low, Medium, High, Emergency };
enum class Producer { SingleAgent, MultiAgentBaseline, External };
enum class AutonomyMode { Manual, Assisted, Autonomous };
enum class EventType { Query, Response, Flag, Alert, Report };

// The eight evaluation axes in canonical order.
enum class Axis {
  ResponseAccuracy,
  TrustAndSafety,
  UserAdaptation,
  ClarityAndTone,
  ConcurrencyHandling,
  HallucinationDetection,
  RelevanceCoherence,
  LinguisticQuality,
};

inline constexpr std::size_t kAxisCount = 8;

template <typename E>
struct EnumNames;

template <>
struct EnumNames<Archetype> {
  static constexpr std::string_view type = "archetype";
  static constexpr std::array<std::string_view, 4> names{"child", "elderly", "neurodivergent",
                                                         "typical_adult"};
};
template <>
struct EnumNames<Category> {
  static constexpr std::string_view type = "category";
  static constexpr std::array<std::string_view, 5> names{"daily_tasks", "education", "entertainment",
                                                         "health", "emergencies"};
};
template <>
struct EnumNames<Urgency> {
  static constexpr std::string_view type = "urgency";
  static constexpr std::array<std::string_view, 4> names{"low", "medium", "high", "emergency"};
};
template <>
struct EnumNames<Producer> {
  static constexpr std::string_view type = "producer";
  static constexpr std::array<std::string_view, 3> names{"single_agent", "multi_agent_baseline",
                                                         "external"};
};
template <>
struct EnumNames<AutonomyMode> {
  static constexpr std::string_view type = "autonomy_mode";
  static constexpr std::array<std::string_view, 3> names{"manual", "assisted", "autonomous"};
};
template <>
struct EnumNames<EventType> {
  static constexpr std::string_view type = "event_type";
  static constexpr std::array<std::string_view, 5> names{"query", "response", "flag", "alert",
                                                         "report"};
};
template <>
struct EnumNames<Axis> {
  static constexpr std::string_view type = "axis";
  static constexpr std::array<std::string_view, 8> names{
      "response_accuracy",     "trust_and_safety",        "user_adaptation",    "clarity_and_tone",
      "concurrency_handling",  "hallucination_detection", "relevance_coherence", "linguistic_quality"};
};

template <typename E>
constexpr std::size_t enum_count() {
  return EnumNames<E>::names.size();
}

template <typename E>
constexpr E enum_at(std::size_t i) {
  return static_cast<E>(i);
}

template <typename E>
constexpr std::size_t enum_index(E value) {
  return static_cast<std::size_t>(value);
}

template <typename E>
constexpr std::string_view to_string(E value) {
  return EnumNames<E>::names[enum_index(value)];
}

// Exact, case-sensitive match against the canonical snake_case name.
template <typename E>
E parse_enum(std::string_view text) {
  const auto& names = EnumNames<E>::names;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == text) return static_cast<E>(i);
  }
  if constexpr (std::is_same_v<E, Axis>) {
    throw Error(Errc::UnknownAxis, std::string(text));
  } else {
    throw Error(Errc::ParseError,
                "unknown " + std::string(EnumNames<E>::type) + " '" + std::string(text) + "'");
  }
}

template <typename E>
constexpr auto all_values() {
  std::array<E, EnumNames<E>::names.size()> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<E>(i);
  return out;
}

// Display label used in summary tables ("Clarity and Tone").
std::string_view axis_label(Axis axis);

}  // namespace hearth
