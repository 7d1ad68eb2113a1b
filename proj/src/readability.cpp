#include "hearth/readability.hpp"

#include <algorithm>
#include <cctype>

#include "hearth/error.hpp"
#include "hearth/text.hpp"

namespace hearth::readability {

namespace {

bool is_vowel(char c) {
  switch (c) {
    case 'a':
    case 'e':
    case 'i':
    case 'o':
    case 'u':
    case 'y':
      return true;
    default:
      return false;
  }
}

bool is_word_byte(unsigned char c) { return std::isalnum(c) != 0 || c >= 0x80; }

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_list_marker_line(std::string_view line) {
  while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) line.remove_prefix(1);
  if (line.empty()) return false;
  const auto followed_by_space = [&](std::size_t at) { return at >= line.size() || is_space(line[at]); };
  if (line.front() == '-' || line.front() == '*') return followed_by_space(1);
  std::size_t digits = 0;
  while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])) != 0) ++digits;
  return digits > 0 && digits < line.size() && line[digits] == '.' && followed_by_space(digits + 1);
}

bool is_non_latin_letter(char32_t cp) {
  if (cp >= 0x1E00 && cp <= 0x1EFF) return false;
  return (cp >= 0x0370 && cp <= 0x1FFF) || (cp >= 0x3040 && cp <= 0x9FFF) ||
         (cp >= 0xAC00 && cp <= 0xD7AF);
}

bool is_latin_letter(char32_t cp) {
  return (cp < 0x80 && std::isalpha(static_cast<int>(cp)) != 0) || (cp >= 0xC0 && cp <= 0x024F) ||
         (cp >= 0x1E00 && cp <= 0x1EFF);
}

}  // namespace

std::size_t syllables(std::string_view word) {
  std::string letters;
  for (const char ch : word) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalpha(c) != 0) letters.push_back(static_cast<char>(std::tolower(c)));
  }
  std::size_t groups = 0;
  bool in_group = false;
  for (const char c : letters) {
    const bool vowel = is_vowel(c);
    if (vowel && !in_group) ++groups;
    in_group = vowel;
  }
  if (letters.size() >= 2 && letters.back() == 'e' && !is_vowel(letters[letters.size() - 2]) &&
      groups > 0) {
    --groups;
  }
  return std::max<std::size_t>(groups, 1);
}

TextStats analyze(std::string_view text) {
  TextStats stats;

  std::size_t words_in_sentence = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    if (i >= text.size()) break;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    const std::string_view token = text.substr(start, i - start);

    const bool has_word_char = std::any_of(token.begin(), token.end(), [](char c) {
      return is_word_byte(static_cast<unsigned char>(c));
    });
    if (has_word_char) {
      ++stats.words;
      ++words_in_sentence;
      const std::size_t s = syllables(token);
      stats.syllables += s;
      if (s >= 3) ++stats.complex_words;
    }
    const char last = token.back();
    if ((last == '.' || last == '!' || last == '?') && words_in_sentence > 0) {
      ++stats.sentences;
      words_in_sentence = 0;
    }
  }
  // An unterminated trailing fragment still counts as a sentence.
  if (words_in_sentence > 0) ++stats.sentences;

  bool in_paragraph = false;
  for (const auto& line : text::split(text, '\n')) {
    const bool blank = text::trim(line).empty();
    if (!blank && !in_paragraph) ++stats.paragraphs;
    in_paragraph = !blank;
    if (is_list_marker_line(line)) ++stats.list_markers;
  }

  std::size_t latin = 0;
  std::size_t non_latin = 0;
  for (std::size_t pos = 0; pos < text.size();) {
    const char32_t cp = text::next_code_point(text, pos);
    if (is_latin_letter(cp)) {
      ++latin;
    } else if (is_non_latin_letter(cp)) {
      ++non_latin;
    }
  }
  stats.latin_script = non_latin <= latin;
  return stats;
}

TextStats text_stats(std::string_view text) {
  if (text::trim(text).empty()) throw Error(Errc::EmptyText, "text is empty after trimming");
  return analyze(text);
}

double flesch(const TextStats& stats) {
  if (stats.sentences == 0 || stats.words == 0) {
    throw Error(Errc::ZeroDenominator, "flesch needs at least one sentence and one word");
  }
  const double words = static_cast<double>(stats.words);
  return 206.835 - 1.015 * (words / static_cast<double>(stats.sentences)) -
         84.6 * (static_cast<double>(stats.syllables) / words);
}

namespace {

// 25 at or below `full`, 0 at or above `zero`, linear in between.
double ramp(double value, double full, double zero) {
  if (value <= full) return 25.0;
  if (value >= zero) return 0.0;
  return 25.0 * (zero - value) / (zero - full);
}

}  // namespace

Breakdown breakdown(std::string_view text) {
  Breakdown b;
  b.stats = text_stats(text);
  const TextStats& s = b.stats;
  if (s.words > 0) {
    const double avg_len = static_cast<double>(s.words) / static_cast<double>(s.sentences);
    b.sentence_length = ramp(avg_len, 20.0, 40.0);
    b.complex_ratio =
        ramp(static_cast<double>(s.complex_words) / static_cast<double>(s.words), 0.10, 0.40);
    b.flesch = flesch(s);
    if (s.latin_script) {
      b.reading_ease = 25.0 * std::clamp(b.flesch, 0.0, 100.0) / 100.0;
    } else {
      b.flags.emplace_back("non_latin_script");
    }
  } else {
    b.flags.emplace_back("no_words");
  }
  b.structure = (s.list_markers >= 1 ? 12.5 : 0.0) + (s.paragraphs >= 2 ? 12.5 : 0.0);
  b.total = std::min(100.0, b.sentence_length + b.complex_ratio + b.reading_ease + b.structure);
  return b;
}

double readability_score(std::string_view text) { return breakdown(text).total; }

}  // namespace hearth::readability
