#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

// Small text utilities shared by the detectors, heuristics and simulator.
namespace hearth::text {

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);
bool contains_phrase(std::string_view haystack_lower, std::string_view phrase_lower);

// Lowercased alphanumeric tokens. Bytes >= 0x80 count as word characters so
// UTF-8 letters stay inside their word.
std::vector<std::string> tokens(std::string_view s);

// Whole-word, case-insensitive occurrences of a (possibly multi-word) phrase.
std::size_t count_phrase(std::string_view text, std::string_view phrase);

// Decodes one UTF-8 code point starting at `pos`, advancing it. Invalid bytes
// decode to U+FFFD and advance by one.
char32_t next_code_point(std::string_view s, std::size_t& pos);

std::vector<std::string> split(std::string_view s, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// RFC 4180 style field quoting and a single-line record splitter.
std::string csv_field(std::string_view field);
std::vector<std::string> parse_csv_record(std::string_view line);

}  // namespace hearth::text
