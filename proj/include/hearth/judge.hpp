#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hearth/core.hpp"

namespace hearth::judge {

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string path = "/v1/chat/completions";
  std::string model_name = "judge";
  int timeout_ms = 30000;
  std::size_t max_in_flight = 4;
  std::size_t retries = 2;
  int backoff_ms = 200;  // doubled after each failed attempt
  bool deterministic = true;  // temperature 0
};

struct JudgeVerdict {
  AxisMap<std::optional<double>> raw;  // absent = missing or malformed
  std::string rationale;
  std::vector<std::string> flags;
  bool parsed = false;  // false: no JSON object found at all

  std::size_t parsed_axes() const;
  bool axis_ok(Axis axis) const { return raw[axis].has_value(); }
};

// Finds the first parsable JSON object in the text. Scores are read from a
// "scores" object when present, otherwise from top-level axis keys. Missing,
// non-numeric or non-finite values leave the axis absent.
JudgeVerdict parse_verdict(std::string_view raw_text);

// 25r for r <= 4, 10r for 4 < r <= 10, r above 10, clamped to [0,100].
// Throws Error(NegativeOrNonFinite).
double normalize_raw(double r);

// Deterministic judge prompt; throws Error(Precondition) when axes is empty.
std::string build_prompt(const ScenarioEntry& entry, const AgentResponse& response,
                         const std::vector<Axis>& axes);

std::string_view axis_definition(Axis axis);

// One judge call. Implementations throw Error(EndpointUnreachable) on
// transport failure and must be safe to call from several threads.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string complete(const std::string& prompt, const ScenarioEntry& entry) = 0;
};

// Chat-completion style JSON POST {model, messages, temperature}.
class HttpTransport : public Transport {
 public:
  explicit HttpTransport(EndpointConfig config) : config_(std::move(config)) {}
  std::string complete(const std::string& prompt, const ScenarioEntry& entry) override;

 private:
  EndpointConfig config_;
};

// Canned replies keyed by entry id ("*" is the default). A value is a reply
// string, a JSON object (sent as its serialization), null (transport
// failure) or an array of those, cycled per call for that entry.
class MockTransport : public Transport {
 public:
  explicit MockTransport(const nlohmann::json& fixture);
  static MockTransport from_file(const std::string& path);  // throws Error(InputError)

  std::string complete(const std::string& prompt, const ScenarioEntry& entry) override;
  std::size_t calls() const;

 private:
  std::map<std::string, std::vector<std::optional<std::string>>> replies_;
  std::map<std::string, std::size_t> cursor_;
  std::size_t calls_ = 0;
  mutable std::mutex mutex_;
};

enum class Provenance { Judge, Fallback, Absent };
std::string_view to_string(Provenance p);

struct AxisScore {
  double score = 0.0;
  Provenance provenance = Provenance::Absent;
  std::size_t runs = 0;  // judge runs in which the axis parsed
};

struct AxisSet {
  AxisMap<AxisScore> axes;
  std::size_t runs_attempted = 0;
  bool endpoint_degraded = false;  // every run failed at the transport
  std::vector<std::string> diagnostics;

  std::vector<Axis> present() const;
};

struct JudgeRequest {
  const ScenarioEntry& entry;
  const AgentResponse& response;
  std::vector<Axis> axes;  // enabled axes; others stay Absent
  std::size_t n_runs = 1;
};

using FallbackFn = std::function<double(Axis)>;

// Runs the judge n_runs times, averages normalized scores per axis over the
// runs where it parsed and fills the remaining enabled axes from `fallback`.
// Transport failures are retried with exponential backoff and never escape.
AxisSet judge_axes(const JudgeRequest& request, Transport& transport, const EndpointConfig& config,
                   const FallbackFn& fallback);

nlohmann::json to_json(const AxisSet& set);

}  // namespace hearth::judge
