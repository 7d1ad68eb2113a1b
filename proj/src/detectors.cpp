#include "hearth/detectors.hpp"

#include <algorithm>
#include <cctype>

#include <nlohmann/json.hpp>

#include "hearth/embedded_data.hpp"
#include "hearth/text.hpp"

namespace hearth::detectors {

using nlohmann::json;

std::string_view to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::Hallucination:
      return "hallucination";
    case IssueKind::WeirdChar:
      return "weird_char";
    case IssueKind::IrrelevantKeyword:
      return "irrelevant_keyword";
    case IssueKind::Anomaly:
      return "anomaly";
  }
  return "unknown";
}

DetectionConfig config_from_json(const json& j) {
  DetectionConfig c;
  for (const auto& rule : j.at("hallucination_patterns")) {
    c.hallucination_patterns.push_back(
        {rule.at("name").get<std::string>(), rule.at("pattern").get<std::string>(), rule.value("icase", false)});
  }
  c.action_claim_pattern = j.value("action_claim_pattern", std::string{});
  c.device_nouns = j.value("device_nouns", std::map<std::string, std::vector<std::string>>{});
  for (const auto& range : j.at("weird_char_ranges")) {
    c.weird_char_ranges.push_back({static_cast<char32_t>(std::stoul(range.at(0).get<std::string>(), nullptr, 16)),
                                   static_cast<char32_t>(std::stoul(range.at(1).get<std::string>(), nullptr, 16))});
  }
  for (const auto& [category, words] : j.at("irrelevant_keywords").items()) {
    c.irrelevant_keywords[parse_enum<Category>(category)] = words.get<std::vector<std::string>>();
  }
  c.repeat_run = j.value("repeat_run", std::size_t{6});
  c.truncation_min_words = j.value("truncation_min_words", std::size_t{5});
  c.placeholder_pattern = j.value("placeholder_pattern", std::string{});
  c.markup_tags = j.value("markup_tags", std::vector<std::string>{});
  return c;
}

DetectionConfig default_config() {
  return config_from_json(json::parse(*data::embedded("detection.json")));
}

namespace {

std::regex compile(const std::string& name, const std::string& pattern, bool icase) {
  try {
    auto flags = std::regex::ECMAScript | std::regex::optimize;
    if (icase) flags |= std::regex::icase;
    return std::regex(pattern, flags);
  } catch (const std::regex_error& e) {
    throw Error(Errc::ConfigError, "pattern '" + name + "' does not compile: " + e.what());
  }
}

std::string escape_regex(std::string_view literal) {
  std::string out;
  for (const char c : literal) {
    if (std::string_view(R"(\^$.|?*+()[]{}/)").find(c) != std::string_view::npos) out += '\\';
    out += c;
  }
  return out;
}

void add_matches(std::vector<IssueSpan>& out, std::string_view text, const std::regex& re,
                 IssueKind kind, const std::string& rule) {
  using It = std::string_view::const_iterator;
  for (std::regex_iterator<It> it(text.begin(), text.end(), re), end; it != end; ++it) {
    const auto begin = static_cast<std::size_t>(it->position(0));
    const auto len = static_cast<std::size_t>(it->length(0));
    if (len == 0) continue;
    out.push_back({kind, begin, begin + len, rule});
  }
}

// Keeps the earliest-starting (then longest) span of each overlapping cluster.
std::vector<IssueSpan> non_overlapping(std::vector<IssueSpan> spans) {
  std::sort(spans.begin(), spans.end(), [](const IssueSpan& a, const IssueSpan& b) {
    if (a.begin != b.begin) return a.begin < b.begin;
    if (a.end != b.end) return a.end > b.end;
    return a.rule < b.rule;
  });
  std::vector<IssueSpan> kept;
  for (auto& span : spans) {
    if (!kept.empty() && span.begin < kept.back().end) continue;
    kept.push_back(std::move(span));
  }
  return kept;
}

bool in_ranges(char32_t cp, const std::vector<CodePointRange>& ranges) {
  return std::any_of(ranges.begin(), ranges.end(),
                     [cp](const CodePointRange& r) { return cp >= r.first && cp <= r.last; });
}

void weird_runs(std::vector<IssueSpan>& out, std::string_view text, const DetectionConfig& config) {
  constexpr std::size_t kNone = std::string_view::npos;
  std::size_t run_start = kNone;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t at = pos;
    const char32_t cp = text::next_code_point(text, pos);
    const bool weird = cp == 0xFFFD || in_ranges(cp, config.weird_char_ranges);
    if (weird && run_start == kNone) run_start = at;
    if (!weird && run_start != kNone) {
      out.push_back({IssueKind::WeirdChar, run_start, at, "weird_char_run"});
      run_start = kNone;
    }
  }
  if (run_start != kNone) out.push_back({IssueKind::WeirdChar, run_start, text.size(), "weird_char_run"});
}

void repeat_runs(std::vector<IssueSpan>& out, std::string_view text, std::size_t min_run) {
  std::size_t pos = 0;
  char32_t previous = 0;
  std::size_t run_begin = 0;
  std::size_t run_length = 0;
  const auto flush = [&](std::size_t run_end) {
    if (run_length >= min_run) out.push_back({IssueKind::Anomaly, run_begin, run_end, "repeated_character"});
  };
  while (pos < text.size()) {
    const std::size_t at = pos;
    const char32_t cp = text::next_code_point(text, pos);
    const bool space = cp < 0x80 && std::isspace(static_cast<int>(cp)) != 0;
    if (!space && run_length > 0 && cp == previous) {
      ++run_length;
      continue;
    }
    flush(at);
    previous = cp;
    run_begin = at;
    run_length = space ? 0 : 1;
  }
  flush(text.size());
}

void bracket_balance(std::vector<IssueSpan>& out, std::string_view text) {
  constexpr std::string_view kOpen = "([{";
  constexpr std::string_view kClose = ")]}";
  for (std::size_t k = 0; k < kOpen.size(); ++k) {
    std::vector<std::size_t> open;
    std::optional<std::size_t> offending;
    for (std::size_t i = 0; i < text.size(); ++i) {
      if (text[i] == kOpen[k]) {
        open.push_back(i);
      } else if (text[i] == kClose[k]) {
        if (open.empty()) {
          if (!offending) offending = i;
        } else {
          open.pop_back();
        }
      }
    }
    if (!offending && !open.empty()) offending = open.front();
    if (offending) out.push_back({IssueKind::Anomaly, *offending, *offending + 1, "unbalanced_bracket"});
  }
}

void markup_balance(std::vector<IssueSpan>& out, std::string_view text, const DetectionConfig& config) {
  const std::string lower = text::to_lower(text);
  for (const auto& tag : config.markup_tags) {
    std::size_t opens = 0;
    std::size_t closes = 0;
    std::optional<std::size_t> first;
    const std::string open_tag = "<" + tag;
    const std::string close_tag = "</" + tag + ">";
    for (std::size_t at = lower.find(open_tag); at != std::string::npos; at = lower.find(open_tag, at + 1)) {
      const std::size_t next = at + open_tag.size();
      if (next < lower.size() && (lower[next] == '>' || lower[next] == ' ')) {
        ++opens;
        if (!first) first = at;
      }
    }
    for (std::size_t at = lower.find(close_tag); at != std::string::npos; at = lower.find(close_tag, at + 1)) {
      ++closes;
      if (!first) first = at;
    }
    if (opens != closes && first) {
      out.push_back({IssueKind::Anomaly, *first, *first + open_tag.size(), "broken_markup"});
    }
  }
  std::size_t fences = 0;
  std::size_t last_fence = 0;
  for (std::size_t at = text.find("```"); at != std::string_view::npos; at = text.find("```", at + 3)) {
    ++fences;
    last_fence = at;
  }
  if (fences % 2 == 1) out.push_back({IssueKind::Anomaly, last_fence, last_fence + 3, "unclosed_code_fence"});
}

void truncation(std::vector<IssueSpan>& out, std::string_view text, std::size_t min_words) {
  const std::string_view trimmed = text::trim(text);
  if (trimmed.empty()) return;
  if (text::tokens(trimmed).size() < min_words) return;
  const auto last_line_start = trimmed.rfind('\n');
  const std::string_view last_line =
      text::trim(last_line_start == std::string_view::npos ? trimmed : trimmed.substr(last_line_start + 1));
  if (!last_line.empty() && (last_line.front() == '-' || last_line.front() == '*' ||
                             std::isdigit(static_cast<unsigned char>(last_line.front())) != 0)) {
    return;
  }
  const auto last = static_cast<unsigned char>(trimmed.back());
  if (std::isalnum(last) != 0 || last == ',' || last == ';' || last == ':' || last == '-' || last == '(') {
    const std::size_t end = static_cast<std::size_t>(trimmed.data() - text.data()) + trimmed.size();
    std::size_t begin = end;
    while (begin > 0 && std::isspace(static_cast<unsigned char>(text[begin - 1])) == 0) --begin;
    out.push_back({IssueKind::Anomaly, begin, end, "truncated_sentence"});
  }
}

}  // namespace

Detector::Detector(DetectionConfig config) : config_(std::move(config)) {
  for (const auto& rule : config_.hallucination_patterns) {
    hallucination_rules_.push_back({rule.name, compile(rule.name, rule.pattern, rule.icase)});
  }
  if (!config_.action_claim_pattern.empty()) {
    action_claim_ = compile("action_claim", config_.action_claim_pattern, true);
  }
  if (!config_.placeholder_pattern.empty()) {
    placeholder_ = compile("placeholder", config_.placeholder_pattern, false);
  }
  for (const Category category : all_values<Category>()) {
    const auto it = config_.irrelevant_keywords.find(category);
    if (it == config_.irrelevant_keywords.end() || it->second.empty()) {
      throw Error(Errc::ConfigError,
                  "irrelevant keyword lexicon empty for category " + std::string(hearth::to_string(category)));
    }
    std::string alternation;
    for (const auto& word : it->second) {
      if (!alternation.empty()) alternation += '|';
      alternation += escape_regex(word);
    }
    irrelevant_.emplace(category, compile("irrelevant", "\\b(?:" + alternation + ")\\b", true));
  }
}

IssueCounts Detector::scan(std::string_view text, const ScenarioEntry& entry,
                           const std::vector<std::string>* executed_actions) const {
  IssueCounts counts;

  std::vector<IssueSpan> hallucinations;
  for (const auto& rule : hallucination_rules_) {
    add_matches(hallucinations, text, rule.re, IssueKind::Hallucination, rule.name);
  }
  if (action_claim_ && executed_actions != nullptr) {
    std::vector<IssueSpan> claims;
    add_matches(claims, text, *action_claim_, IssueKind::Hallucination, "unlogged_action_claim");
    for (auto& claim : claims) {
      const std::string claim_text(text.substr(claim.begin, claim.end - claim.begin));
      bool backed = false;
      bool named_device = false;
      for (const auto& [device, nouns] : config_.device_nouns) {
        const bool mentioned = std::any_of(nouns.begin(), nouns.end(), [&](const std::string& noun) {
          return text::count_phrase(claim_text, noun) > 0;
        });
        if (!mentioned) continue;
        named_device = true;
        backed = backed || std::any_of(executed_actions->begin(), executed_actions->end(),
                                       [&](const std::string& id) { return id.rfind(device, 0) == 0; });
      }
      if (!named_device) backed = !executed_actions->empty();
      if (!backed) hallucinations.push_back(std::move(claim));
    }
  }
  hallucinations = non_overlapping(std::move(hallucinations));

  std::vector<IssueSpan> weird;
  weird_runs(weird, text, config_);

  std::vector<IssueSpan> irrelevant;
  add_matches(irrelevant, text, irrelevant_.at(entry.category), IssueKind::IrrelevantKeyword,
              "irrelevant_for_" + std::string(hearth::to_string(entry.category)));
  irrelevant = non_overlapping(std::move(irrelevant));

  std::vector<IssueSpan> anomalies;
  repeat_runs(anomalies, text, config_.repeat_run);
  bracket_balance(anomalies, text);
  markup_balance(anomalies, text, config_);
  if (placeholder_) add_matches(anomalies, text, *placeholder_, IssueKind::Anomaly, "template_placeholder");
  truncation(anomalies, text, config_.truncation_min_words);
  anomalies = non_overlapping(std::move(anomalies));

  counts.hallucinations = hallucinations.size();
  counts.weird_chars = weird.size();
  counts.irrelevant_keywords = irrelevant.size();
  counts.anomalies = anomalies.size();
  for (auto* group : {&hallucinations, &weird, &irrelevant, &anomalies}) {
    counts.spans.insert(counts.spans.end(), group->begin(), group->end());
  }
  return counts;
}

IssueCounts scan(std::string_view text, const ScenarioEntry& entry, const Detector& detector) {
  return detector.scan(text, entry);
}

double penalty_points(const IssueCounts& c) {
  return 10.0 * static_cast<double>(c.hallucinations) + 5.0 * static_cast<double>(c.weird_chars) +
         15.0 * static_cast<double>(c.irrelevant_keywords) + 3.0 * static_cast<double>(c.anomalies);
}

double severity(const IssueCounts& counts) {
  return 100.0 - std::clamp(penalty_points(counts), 0.0, 100.0);
}

json spans_to_json(const IssueCounts& counts) {
  json spans = json::array();
  for (const auto& s : counts.spans) {
    spans.push_back({{"kind", to_string(s.kind)}, {"begin", s.begin}, {"end", s.end}, {"rule", s.rule}});
  }
  return spans;
}

}  // namespace hearth::detectors
