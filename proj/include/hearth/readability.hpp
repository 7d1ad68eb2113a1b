#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace hearth::readability {

struct TextStats {
  std::size_t sentences = 0;
  std::size_t words = 0;
  std::size_t syllables = 0;
  std::size_t complex_words = 0;  // >= 3 syllables
  std::size_t list_markers = 0;
  std::size_t paragraphs = 0;
  bool latin_script = true;

  friend bool operator==(const TextStats&, const TextStats&) = default;
};

// Vowel-group syllable counter: contiguous [aeiouy] runs, a lone trailing
// 'e' after a consonant is silent, minimum one per word.
std::size_t syllables(std::string_view word);

// Tokenizer behind text_stats, total over any input (including empty text).
TextStats analyze(std::string_view text);

// Throws Error(EmptyText) when the text is blank after trimming.
TextStats text_stats(std::string_view text);

// 206.835 - 1.015 (words/sentences) - 84.6 (syllables/words), unclamped.
// Throws Error(ZeroDenominator) when sentences or words is zero.
double flesch(const TextStats& stats);

struct Breakdown {
  double sentence_length = 0.0;  // C1
  double complex_ratio = 0.0;    // C2
  double reading_ease = 0.0;     // C3
  double structure = 0.0;        // C4
  double total = 0.0;
  double flesch = 0.0;
  TextStats stats;
  std::vector<std::string> flags;
};

Breakdown breakdown(std::string_view text);  // throws Error(EmptyText)
double readability_score(std::string_view text);

}  // namespace hearth::readability
