#include "text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "nerif/error.hpp"

namespace nerif::textx {

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

namespace {

bool iequal_at(std::string_view hay, std::size_t pos, std::string_view needle) {
  if (pos + needle.size() > hay.size()) return false;
  for (std::size_t i = 0; i < needle.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(hay[pos + i])) !=
        std::tolower(static_cast<unsigned char>(needle[i])))
      return false;
  }
  return true;
}

}  // namespace

std::size_t find_word(std::string_view haystack, std::string_view needle, std::size_t from) {
  if (needle.empty() || haystack.size() < needle.size()) return std::string_view::npos;
  for (std::size_t pos = from; pos + needle.size() <= haystack.size(); ++pos) {
    if (!iequal_at(haystack, pos, needle)) continue;
    const bool left_ok = pos == 0 || !is_word_char(haystack[pos - 1]);
    const std::size_t after = pos + needle.size();
    const bool right_ok = after == haystack.size() || !is_word_char(haystack[after]);
    if (left_ok && right_ok) return pos;
  }
  return std::string_view::npos;
}

bool contains_word(std::string_view haystack, std::string_view needle) {
  return find_word(haystack, needle) != std::string_view::npos;
}

std::vector<std::size_t> find_all_words(std::string_view haystack, std::string_view needle) {
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while ((pos = find_word(haystack, needle, pos)) != std::string_view::npos) {
    out.push_back(pos);
    pos += needle.size();
  }
  return out;
}

std::vector<Span> sentence_spans(std::string_view s) {
  std::vector<Span> out;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    const bool boundary = i == s.size() || s[i] == '.' || s[i] == '!' || s[i] == '?' || s[i] == '\n';
    if (!boundary) continue;
    std::size_t b = begin, e = i;
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    if (e > b) out.push_back({b, e});
    begin = i + 1;
  }
  return out;
}

std::vector<Span> clause_spans(std::string_view sentence) {
  static constexpr std::string_view kConjunctions[] = {"but", "however", "although", "whereas",
                                                       "while", "yet"};
  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    if (sentence[i] == ',' || sentence[i] == ';') cuts.push_back(i);
  }
  for (const auto& word : kConjunctions) {
    for (std::size_t pos : find_all_words(sentence, word)) cuts.push_back(pos);
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  std::vector<Span> out;
  std::size_t begin = 0;
  auto push = [&](std::size_t b, std::size_t e) {
    while (b < e && (std::isspace(static_cast<unsigned char>(sentence[b])) || sentence[b] == ',' ||
                     sentence[b] == ';'))
      ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(sentence[e - 1]))) --e;
    if (e > b) out.push_back({b, e});
  };
  for (std::size_t cut : cuts) {
    push(begin, cut);
    begin = cut;
  }
  push(begin, sentence.size());
  return out;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Errc::MissingTemplate, "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace nerif::textx
