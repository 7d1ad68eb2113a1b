#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "hearth/core.hpp"

namespace hearth::scenario {

// A query template and the expected response written for it. Slots use
// {name} syntax and share one value per entry.
struct TemplateItem {
  std::string query;
  std::string response;
};

struct TemplateGroup {
  Archetype archetype;
  Category category;
  std::vector<TemplateItem> items;
  std::vector<std::string> constraints;
  std::vector<Urgency> urgencies;  // empty: category default
};

struct ConflictPair {
  std::string tag;  // noise_vs_quiet, brightness_vs_dim, shared_device_contention
  Archetype first;
  Archetype second;
  std::string first_clause;
  std::string second_clause;
  std::string first_resolution;
  std::string second_resolution;
};

struct TemplateBank {
  std::map<std::string, std::vector<std::string>> slots;
  std::vector<TemplateGroup> groups;
  std::map<Archetype, std::vector<std::string>> style_tags;
  std::vector<ConflictPair> conflicts;
  std::size_t child_max_syllables = 2;

  const TemplateGroup* find(Archetype archetype, Category category) const;
};

// Parses and validates a bank: every (archetype, category) pair has a
// template, every referenced slot exists, neurodivergent responses are step
// lists and child query words stay within the syllable bound.
TemplateBank bank_from_json(const nlohmann::json& j);
TemplateBank load_bank(const std::string& path);  // throws Error(MissingTemplate) if unreadable
TemplateBank default_bank();

// Explicit category -> count quota, or balanced when empty.
using CategoryQuota = std::map<Category, std::size_t>;

struct GenerationConfig {
  std::size_t total = 0;
  double concurrent_fraction = 0.70;
  CategoryQuota category_quota;  // empty = balanced
  std::uint64_t seed = 0;
  std::size_t max_group_size = 4;
  std::string language = "en";
  // Overrides the bank's conflict table when set.
  std::optional<std::vector<ConflictPair>> conflict_pairs;
};

std::vector<ScenarioEntry> generate_batch(const GenerationConfig& config, const TemplateBank& bank);

// Partitions `entries` into archetype-diverse concurrency groups of
// `group_size`, injecting the first matching conflict pair into each group.
// Entries that cannot join a diverse group stay single.
std::vector<ScenarioEntry> interleave_concurrent(std::vector<ScenarioEntry> entries, std::size_t group_size,
                                                 const GenerationConfig& config, const TemplateBank& bank);

struct QuotaDeviation {
  Category category;
  std::size_t expected;
  std::size_t actual;
  bool deficit;
};

struct DistributionReport {
  std::size_t total = 0;
  std::map<Category, std::size_t> category_counts;
  std::map<Archetype, std::size_t> archetype_counts;
  std::size_t grouped = 0;
  double concurrent_fraction = 0.0;
  std::vector<QuotaDeviation> deviations;
  bool concurrency_deviation = false;

  bool ok() const { return deviations.empty() && !concurrency_deviation; }
};

struct DistributionExpectation {
  CategoryQuota quota;  // empty = balanced over the batch size
  std::size_t tolerance = 1;
  std::optional<double> concurrent_fraction;
  double fraction_tolerance = 0.02;
};

DistributionReport validate_distribution(const std::vector<ScenarioEntry>& batch,
                                         const DistributionExpectation& expect = {});

nlohmann::json to_json(const DistributionReport& report);

// Words of a child-facing text that exceed the bank's syllable bound.
std::vector<std::string> overlong_child_words(std::string_view text, const TemplateBank& bank);

// Balanced split: total/5 each, remainder to the first categories in order.
CategoryQuota balanced_quota(std::size_t total);

// Optional template authoring through an external text generator (off by
// default). Returns the candidate query template, or nullopt when the reply
// is empty or violates the archetype's style bound.
using TextGenerator = std::function<std::string(const std::string& prompt)>;
std::optional<std::string> draft_query_template(const TextGenerator& generate, Archetype archetype,
                                                Category category, const TemplateBank& bank);

std::string to_jsonl(const std::vector<ScenarioEntry>& batch);
std::vector<ScenarioEntry> from_jsonl(std::string_view text);
std::string to_csv(const std::vector<ScenarioEntry>& batch);

}  // namespace hearth::scenario
