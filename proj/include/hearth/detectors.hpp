#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hearth/core.hpp"

namespace hearth::detectors {

enum class IssueKind { Hallucination, WeirdChar, IrrelevantKeyword, Anomaly };

std::string_view to_string(IssueKind kind);

struct IssueSpan {
  IssueKind kind;
  std::size_t begin;  // byte offsets, half-open
  std::size_t end;
  std::string rule;

  friend bool operator==(const IssueSpan&, const IssueSpan&) = default;
};

struct IssueCounts {
  std::size_t hallucinations = 0;
  std::size_t weird_chars = 0;  // contiguous runs, not code points
  std::size_t irrelevant_keywords = 0;
  std::size_t anomalies = 0;
  std::vector<IssueSpan> spans;

  bool clean() const {
    return hallucinations == 0 && weird_chars == 0 && irrelevant_keywords == 0 && anomalies == 0;
  }
};

struct PatternRule {
  std::string name;
  std::string pattern;
  bool icase = false;
};

struct CodePointRange {
  char32_t first;
  char32_t last;
};

struct DetectionConfig {
  std::vector<PatternRule> hallucination_patterns;  // URLs, phone numbers, fabricated content
  std::string action_claim_pattern;                 // only applied when an action log is supplied
  std::map<std::string, std::vector<std::string>> device_nouns;  // device kind -> nouns
  std::vector<CodePointRange> weird_char_ranges;
  std::map<Category, std::vector<std::string>> irrelevant_keywords;
  std::size_t repeat_run = 6;
  std::size_t truncation_min_words = 5;
  std::string placeholder_pattern;
  std::vector<std::string> markup_tags;
};

DetectionConfig config_from_json(const nlohmann::json& j);
DetectionConfig default_config();

// A DetectionConfig with every pattern compiled. Throws Error(ConfigError)
// when a pattern does not compile or a category lexicon is empty.
class Detector {
 public:
  explicit Detector(DetectionConfig config);

  const DetectionConfig& config() const { return config_; }

  // `executed_actions` are device ids from the action log; when present,
  // claims of completed device actions with no matching executed write count
  // as fabricated content.
  IssueCounts scan(std::string_view text, const ScenarioEntry& entry,
                   const std::vector<std::string>* executed_actions = nullptr) const;

 private:
  struct CompiledRule {
    std::string name;
    std::regex re;
  };

  DetectionConfig config_;
  std::vector<CompiledRule> hallucination_rules_;
  std::optional<std::regex> action_claim_;
  std::optional<std::regex> placeholder_;
  std::map<Category, std::regex> irrelevant_;
};

IssueCounts scan(std::string_view text, const ScenarioEntry& entry, const Detector& detector);

// 100 - clamp(10 h + 5 w + 15 i + 3 a, 0, 100); 100 means clean text.
double severity(const IssueCounts& counts);
double penalty_points(const IssueCounts& counts);  // unclamped 10h+5w+15i+3a

nlohmann::json spans_to_json(const IssueCounts& counts);

}  // namespace hearth::detectors
