#include "hearth/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "hearth/embedded_data.hpp"
#include "hearth/readability.hpp"
#include "hearth/rng.hpp"
#include "hearth/text.hpp"

namespace hearth::scenario {

using nlohmann::json;

namespace {

const std::regex& slot_pattern() {
  static const std::regex re(R"(\{([a-z_]+)\})");
  return re;
}

std::vector<std::string> slot_names(const std::string& tmpl) {
  std::vector<std::string> out;
  for (std::sregex_iterator it(tmpl.begin(), tmpl.end(), slot_pattern()), end; it != end; ++it) {
    out.push_back((*it)[1].str());
  }
  return out;
}

std::string fill(const std::string& tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t last = 0;
  for (std::sregex_iterator it(tmpl.begin(), tmpl.end(), slot_pattern()), end; it != end; ++it) {
    out.append(tmpl, last, static_cast<std::size_t>(it->position()) - last);
    out += values.at((*it)[1].str());
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(tmpl, last);
  return out;
}

bool is_step_list(const std::string& text) {
  static const std::regex step(R"(^\s*\d+\.\s)");
  std::size_t steps = 0;
  for (const auto& line : text::split(text, '\n')) {
    if (std::regex_search(line, step)) ++steps;
  }
  return steps >= 2;
}

std::vector<Urgency> default_urgencies(Category category) {
  switch (category) {
    case Category::Emergencies:
      return {Urgency::High, Urgency::Emergency};
    case Category::Health:
      return {Urgency::Low, Urgency::Medium, Urgency::High};
    default:
      return {Urgency::Low, Urgency::Medium};
  }
}

int pick_age(Rng& rng, Archetype archetype) {
  const AgeBand band = age_band(archetype);
  // Elderly band is open-ended; keep generated ages plausible.
  return rng.between(band.min_age, std::min(band.max_age, 90));
}

void check_child_text(const std::string& text, const TemplateBank& bank, const std::string& where) {
  const auto bad = overlong_child_words(text, bank);
  if (!bad.empty()) {
    throw Error(Errc::MissingTemplate,
                fmt::format("{}: child text uses words above {} syllables: {}", where,
                            bank.child_max_syllables, text::join(bad, ", ")));
  }
}

void add_unique(std::vector<std::string>& list, const std::string& tag) {
  if (std::find(list.begin(), list.end(), tag) == list.end()) list.push_back(tag);
}

// Injects the first conflict pair (table order) whose two archetypes are both
// present in the group.
void inject_conflict(std::vector<ScenarioEntry*>& members, const std::vector<ConflictPair>& conflicts) {
  for (const auto& pair : conflicts) {
    ScenarioEntry* first = nullptr;
    ScenarioEntry* second = nullptr;
    for (auto* m : members) {
      if (!first && m->archetype == pair.first) first = m;
      else if (!second && m->archetype == pair.second) second = m;
    }
    if (!first || !second) continue;
    const std::string tag = "conflict:" + pair.tag;
    first->query += " " + pair.first_clause;
    first->expected_response += " " + pair.first_resolution;
    second->query += " " + pair.second_clause;
    second->expected_response += " " + pair.second_resolution;
    add_unique(first->constraints, tag);
    add_unique(second->constraints, tag);
    return;
  }
}

ScenarioEntry make_entry(Rng& rng, const TemplateBank& bank, Archetype archetype, Category category,
                         const GenerationConfig& config) {
  const TemplateGroup* group = bank.find(archetype, category);
  if (!group) {
    throw Error(Errc::MissingTemplate, fmt::format("{}/{}", to_string(archetype), to_string(category)));
  }
  const TemplateItem& item = rng.pick(group->items);
  std::map<std::string, std::string> values;
  for (const auto* tmpl : {&item.query, &item.response}) {
    for (const auto& name : slot_names(*tmpl)) {
      if (!values.count(name)) values[name] = rng.pick(bank.slots.at(name));
    }
  }
  ScenarioEntry e;
  e.archetype = archetype;
  e.category = category;
  e.age = pick_age(rng, archetype);
  e.query = fill(item.query, values);
  e.expected_response = fill(item.response, values);
  const auto urgencies = group->urgencies.empty() ? default_urgencies(category) : group->urgencies;
  e.urgency = rng.pick(urgencies);
  if (auto it = bank.style_tags.find(archetype); it != bank.style_tags.end()) {
    for (const auto& tag : it->second) add_unique(e.constraints, tag);
  }
  for (const auto& tag : group->constraints) add_unique(e.constraints, tag);
  e.language = config.language;
  return e;
}

std::vector<std::size_t> group_sizes(Rng& rng, std::size_t grouped, std::size_t max_size) {
  std::vector<std::size_t> sizes;
  std::size_t remaining = grouped;
  while (remaining > 0) {
    std::size_t size = static_cast<std::size_t>(
        rng.between(2, static_cast<int>(std::min(max_size, remaining))));
    if (remaining - size == 1) size = size > 2 ? size - 1 : size + 1;
    sizes.push_back(size);
    remaining -= size;
  }
  return sizes;
}

}  // namespace

const TemplateGroup* TemplateBank::find(Archetype archetype, Category category) const {
  for (const auto& g : groups) {
    if (g.archetype == archetype && g.category == category && !g.items.empty()) return &g;
  }
  return nullptr;
}

std::vector<std::string> overlong_child_words(std::string_view text_in, const TemplateBank& bank) {
  std::vector<std::string> out;
  for (const auto& word : text::tokens(text_in)) {
    const bool numeric = std::all_of(word.begin(), word.end(), [](unsigned char c) { return std::isdigit(c); });
    if (!numeric && readability::syllables(word) > bank.child_max_syllables) out.push_back(word);
  }
  return out;
}

TemplateBank bank_from_json(const json& j) {
  TemplateBank bank;
  try {
    bank.child_max_syllables = j.value("child_max_syllables", std::size_t{2});
    for (const auto& [name, values] : j.at("slots").items()) {
      bank.slots[name] = values.get<std::vector<std::string>>();
      if (bank.slots[name].empty()) throw Error(Errc::MissingTemplate, "slot '" + name + "' has no values");
    }
    if (j.contains("style_tags")) {
      for (const auto& [name, tags] : j.at("style_tags").items()) {
        bank.style_tags[parse_enum<Archetype>(name)] = tags.get<std::vector<std::string>>();
      }
    }
    for (const auto& t : j.at("templates")) {
      TemplateGroup g{parse_enum<Archetype>(t.at("archetype").get<std::string>()),
                      parse_enum<Category>(t.at("category").get<std::string>()),
                      {},
                      t.value("constraints", std::vector<std::string>{}),
                      {}};
      for (const auto& item : t.at("items")) {
        g.items.push_back({item.at("q").get<std::string>(), item.at("r").get<std::string>()});
      }
      for (const auto& u : t.value("urgency", std::vector<std::string>{})) {
        g.urgencies.push_back(parse_enum<Urgency>(u));
      }
      bank.groups.push_back(std::move(g));
    }
    for (const auto& c : j.value("conflicts", json::array())) {
      bank.conflicts.push_back({c.at("tag").get<std::string>(),
                                parse_enum<Archetype>(c.at("first").get<std::string>()),
                                parse_enum<Archetype>(c.at("second").get<std::string>()),
                                c.at("first_clause").get<std::string>(),
                                c.at("second_clause").get<std::string>(),
                                c.at("first_resolution").get<std::string>(),
                                c.at("second_resolution").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw Error(Errc::MissingTemplate, std::string("template bank: ") + e.what());
  }

  for (const auto archetype : all_values<Archetype>()) {
    for (const auto category : all_values<Category>()) {
      if (!bank.find(archetype, category)) {
        throw Error(Errc::MissingTemplate, fmt::format("{}/{}", to_string(archetype), to_string(category)));
      }
    }
  }
  for (const auto& g : bank.groups) {
    const std::string where = fmt::format("{}/{}", to_string(g.archetype), to_string(g.category));
    for (const auto& item : g.items) {
      for (const auto* tmpl : {&item.query, &item.response}) {
        for (const auto& name : slot_names(*tmpl)) {
          if (!bank.slots.count(name)) throw Error(Errc::MissingTemplate, where + ": unknown slot " + name);
        }
      }
      if (g.archetype == Archetype::Neurodivergent && !is_step_list(item.response)) {
        throw Error(Errc::MissingTemplate, where + ": response is not a step list");
      }
      if (g.archetype == Archetype::Child) {
        check_child_text(std::regex_replace(item.query, slot_pattern(), " "), bank, where);
        for (const auto& name : slot_names(item.query)) {
          for (const auto& value : bank.slots.at(name)) check_child_text(value, bank, where + " slot " + name);
        }
      }
      if (g.urgencies.empty() == false && g.category != Category::Emergencies &&
          std::count(g.urgencies.begin(), g.urgencies.end(), Urgency::Emergency) > 0) {
        throw Error(Errc::MissingTemplate, where + ": emergency urgency outside emergencies");
      }
    }
  }
  for (const auto& c : bank.conflicts) {
    if (c.first == Archetype::Child) check_child_text(c.first_clause, bank, "conflict " + c.tag);
    if (c.second == Archetype::Child) check_child_text(c.second_clause, bank, "conflict " + c.tag);
  }
  return bank;
}

TemplateBank load_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MissingTemplate, "cannot read template bank " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(Errc::MissingTemplate, path + ": " + e.what());
  }
  return bank_from_json(j);
}

TemplateBank default_bank() {
  static const TemplateBank bank = bank_from_json(json::parse(*data::embedded("templates.json")));
  return bank;
}

CategoryQuota balanced_quota(std::size_t total) {
  CategoryQuota quota;
  const std::size_t n = enum_count<Category>();
  for (std::size_t i = 0; i < n; ++i) {
    quota[enum_at<Category>(i)] = total / n + (i < total % n ? 1 : 0);
  }
  return quota;
}

std::vector<ScenarioEntry> generate_batch(const GenerationConfig& config, const TemplateBank& bank) {
  if (!(config.concurrent_fraction >= 0.0 && config.concurrent_fraction <= 1.0)) {
    throw Error(Errc::InfeasibleQuota, "concurrent_fraction must lie in [0,1]");
  }
  if (config.max_group_size < 2) throw Error(Errc::InfeasibleQuota, "max_group_size must be >= 2");

  CategoryQuota quota = config.category_quota.empty() ? balanced_quota(config.total) : config.category_quota;
  std::size_t quota_sum = 0;
  for (const auto& [cat, n] : quota) quota_sum += n;
  if (quota_sum != config.total) {
    throw Error(Errc::InfeasibleQuota, fmt::format("quotas sum to {} but total is {}", quota_sum, config.total));
  }
  if (config.total == 0) return {};

  Rng rng(config.seed);
  std::vector<Category> categories;
  categories.reserve(config.total);
  for (const auto& [cat, n] : quota) categories.insert(categories.end(), n, cat);
  rng.shuffle(categories);

  // Grouped entries get archetype-distinct groups, so group size is capped by
  // the number of archetypes.
  const std::size_t max_size = std::min(config.max_group_size, enum_count<Archetype>());
  auto grouped = static_cast<std::size_t>(std::llround(static_cast<double>(config.total) * config.concurrent_fraction));
  if (grouped == 1) grouped = config.total >= 2 ? 2 : 0;
  if (max_size == 2 && grouped % 2 == 1) grouped -= 1;

  // Units are either a group (size >= 2) or a single entry (size 1), shuffled
  // so groups are interleaved with singles.
  std::vector<std::size_t> units = group_sizes(rng, grouped, max_size);
  units.insert(units.end(), config.total - grouped, 1);
  rng.shuffle(units);

  const auto archetypes = all_values<Archetype>();
  const auto& conflicts = config.conflict_pairs ? *config.conflict_pairs : bank.conflicts;
  std::vector<ScenarioEntry> out;
  out.reserve(config.total);
  std::size_t group_no = 0;
  for (const std::size_t size : units) {
    std::vector<Archetype> pool(archetypes.begin(), archetypes.end());
    rng.shuffle(pool);
    std::optional<std::string> group_id;
    if (size > 1) group_id = fmt::format("grp-{}-{:04d}", config.seed, ++group_no);
    const std::size_t begin = out.size();
    for (std::size_t k = 0; k < size; ++k) {
      const Archetype archetype = size > 1 ? pool[k] : pool[0];
      ScenarioEntry e = make_entry(rng, bank, archetype, categories[out.size()], config);
      e.id = fmt::format("s{}-{:05d}", config.seed, out.size());
      e.concurrent_group = group_id;
      out.push_back(std::move(e));
    }
    if (size > 1) {
      std::vector<ScenarioEntry*> members;
      for (std::size_t k = begin; k < out.size(); ++k) members.push_back(&out[k]);
      inject_conflict(members, conflicts);
    }
  }
  return out;
}

std::vector<ScenarioEntry> interleave_concurrent(std::vector<ScenarioEntry> entries, std::size_t group_size,
                                                 const GenerationConfig& config, const TemplateBank& bank) {
  if (group_size < 2) throw Error(Errc::Precondition, "group_size must be >= 2");
  Rng rng(config.seed);
  std::map<Archetype, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    entries[i].concurrent_group.reset();
    buckets[entries[i].archetype].push_back(i);
  }
  if (buckets.size() < 2) {
    throw Error(Errc::NotEnoughEntries, "archetype-diverse grouping needs at least two archetypes");
  }
  for (auto& [archetype, idx] : buckets) rng.shuffle(idx);

  const auto& conflicts = config.conflict_pairs ? *config.conflict_pairs : bank.conflicts;
  std::size_t group_no = 0;
  while (true) {
    // Draw from the fullest buckets first so diversity lasts as long as possible.
    std::vector<Archetype> order;
    for (const auto& [archetype, idx] : buckets) {
      if (!idx.empty()) order.push_back(archetype);
    }
    if (order.size() < 2) break;
    std::stable_sort(order.begin(), order.end(),
                     [&](Archetype a, Archetype b) { return buckets[a].size() > buckets[b].size(); });
    order.resize(std::min(order.size(), group_size));
    const std::string id = fmt::format("grp-{:04d}", ++group_no);
    std::vector<ScenarioEntry*> members;
    for (const auto archetype : order) {
      auto& idx = buckets[archetype];
      ScenarioEntry& e = entries[idx.back()];
      idx.pop_back();
      e.concurrent_group = id;
      members.push_back(&e);
    }
    std::sort(members.begin(), members.end(),
              [](const ScenarioEntry* a, const ScenarioEntry* b) { return a->id < b->id; });
    inject_conflict(members, conflicts);
  }
  return entries;
}

DistributionReport validate_distribution(const std::vector<ScenarioEntry>& batch,
                                         const DistributionExpectation& expect) {
  DistributionReport report;
  report.total = batch.size();
  for (const auto c : all_values<Category>()) report.category_counts[c] = 0;
  for (const auto a : all_values<Archetype>()) report.archetype_counts[a] = 0;
  for (const auto& e : batch) {
    ++report.category_counts[e.category];
    ++report.archetype_counts[e.archetype];
    if (e.concurrent_group) ++report.grouped;
  }
  report.concurrent_fraction =
      batch.empty() ? 0.0 : static_cast<double>(report.grouped) / static_cast<double>(batch.size());

  const CategoryQuota quota = expect.quota.empty() ? balanced_quota(batch.size()) : expect.quota;
  for (const auto c : all_values<Category>()) {
    const auto it = quota.find(c);
    const std::size_t expected = it == quota.end() ? 0 : it->second;
    const std::size_t actual = report.category_counts[c];
    const std::size_t gap = actual > expected ? actual - expected : expected - actual;
    if (gap > expect.tolerance) report.deviations.push_back({c, expected, actual, actual < expected});
  }
  if (expect.concurrent_fraction && !batch.empty()) {
    report.concurrency_deviation =
        std::abs(report.concurrent_fraction - *expect.concurrent_fraction) > expect.fraction_tolerance + 1e-12;
  }
  return report;
}

json to_json(const DistributionReport& report) {
  json j;
  j["total"] = report.total;
  j["category_counts"] = json::object();
  for (const auto& [c, n] : report.category_counts) j["category_counts"][std::string(to_string(c))] = n;
  j["archetype_counts"] = json::object();
  for (const auto& [a, n] : report.archetype_counts) j["archetype_counts"][std::string(to_string(a))] = n;
  j["grouped"] = report.grouped;
  j["concurrent_fraction"] = report.concurrent_fraction;
  j["deviations"] = json::array();
  for (const auto& d : report.deviations) {
    j["deviations"].push_back({{"category", to_string(d.category)},
                               {"expected", d.expected},
                               {"actual", d.actual},
                               {"kind", d.deficit ? "deficit" : "surplus"}});
  }
  j["concurrency_deviation"] = report.concurrency_deviation;
  j["ok"] = report.ok();
  return j;
}

std::optional<std::string> draft_query_template(const TextGenerator& generate, Archetype archetype,
                                                Category category, const TemplateBank& bank) {
  std::string prompt = fmt::format(
      "Write one short household voice-assistant request from a {} user about {}. "
      "Reply with the request only, on one line.",
      to_string(archetype), to_string(category));
  if (auto it = bank.style_tags.find(archetype); it != bank.style_tags.end() && !it->second.empty()) {
    prompt += " Style: " + text::join(it->second, ", ") + ".";
  }
  if (archetype == Archetype::Child) {
    prompt += fmt::format(" Use only words of at most {} syllables.", bank.child_max_syllables);
  }
  const std::string reply = generate(prompt);
  std::string line(text::trim(reply.substr(0, reply.find('\n'))));
  if (line.size() >= 2 && line.front() == '"' && line.back() == '"') line = line.substr(1, line.size() - 2);
  if (text::trim(line).empty()) return std::nullopt;
  for (const auto& name : slot_names(line)) {
    if (!bank.slots.count(name)) return std::nullopt;
  }
  if (archetype == Archetype::Child && !overlong_child_words(std::regex_replace(line, slot_pattern(), " "), bank).empty()) {
    return std::nullopt;
  }
  return line;
}

std::string to_jsonl(const std::vector<ScenarioEntry>& batch) {
  std::string out;
  for (const auto& e : batch) {
    out += json(e).dump();
    out += '\n';
  }
  return out;
}

std::vector<ScenarioEntry> from_jsonl(std::string_view text_in) {
  std::vector<ScenarioEntry> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split(text_in, '\n')) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<ScenarioEntry>());
    } catch (const json::exception& e) {
      throw Error(Errc::InputError, fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return out;
}

std::string to_csv(const std::vector<ScenarioEntry>& batch) {
  std::string out =
      "id,archetype,age,query,category,urgency,expected_response,constraints,language,concurrent_group\n";
  for (const auto& e : batch) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", text::csv_field(e.id), to_string(e.archetype), e.age,
                       text::csv_field(e.query), to_string(e.category), to_string(e.urgency),
                       text::csv_field(e.expected_response), text::csv_field(text::join(e.constraints, ";")),
                       text::csv_field(e.language), text::csv_field(e.concurrent_group.value_or("")));
  }
  return out;
}

}  // namespace hearth::scenario
