#pragma once

// Internal text scanning helpers shared by the level extractor and the
// response parser. Not installed.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace nerif::textx {

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);

inline bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

/// Case-insensitive whole-word/phrase search. Both ends of the needle must
/// sit on a word boundary in the haystack. Returns npos when absent.
std::size_t find_word(std::string_view haystack, std::string_view needle, std::size_t from = 0);

bool contains_word(std::string_view haystack, std::string_view needle);

/// Positions of every whole-word occurrence.
std::vector<std::size_t> find_all_words(std::string_view haystack, std::string_view needle);

/// Half-open [begin, end) slices of `s`.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Sentence spans: split on '.', '!', '?', and newline. Delimiters are not
/// included; empty sentences are dropped.
std::vector<Span> sentence_spans(std::string_view s);

/// Clause spans within one sentence: split on ',', ';', and coordinating
/// cue words (but/however/although/whereas/while/yet).
std::vector<Span> clause_spans(std::string_view sentence);

std::string read_text_file(const std::string& path);

}  // namespace nerif::textx
