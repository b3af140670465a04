#include "nerif/response_parser.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "nerif/error.hpp"
#include "nerif/rng.hpp"
#include "text.hpp"

namespace nerif::parser {

using assess::ComponentVerdict;
using assess::ProficiencyLevel;

namespace {

const CueTable kBuiltinCues = {
    // AFFIRM
    {"includes", "include", "included", "including", "present", "shows", "show", "shown",
     "showing", "depicts", "depicted", "labeled", "labelled", "labels", "indicates", "indicate",
     "indicated", "contains", "contain", "visible", "evident", "demonstrates", "identifies",
     "identified"},
    // NEGATE
    {"does not", "do not", "did not", "not", "no", "missing", "lacks", "lack", "lacking",
     "absent", "without", "fails to", "fail to", "cannot", "never", "no indication",
     "not present"},
    // HEDGE
    {"may", "might", "unclear", "possibly", "possible", "perhaps", "partially", "partial",
     "uncertain", "ambiguous", "hard to tell", "difficult to determine", "seems", "appears to",
     "somewhat"},
};

enum class CueClass { None, Affirm, Negate, Hedge };

bool any_cue(std::string_view text, const std::vector<std::string>& cues) {
  for (const auto& cue : cues) {
    if (textx::contains_word(text, cue)) return true;
  }
  return false;
}

/// Hedge > negate > affirm; None when the text carries no cue at all.
CueClass classify_cues(std::string_view text, const CueTable& cues) {
  if (any_cue(text, cues.hedge)) return CueClass::Hedge;
  if (any_cue(text, cues.negate)) return CueClass::Negate;
  if (any_cue(text, cues.affirm)) return CueClass::Affirm;
  return CueClass::None;
}

ComponentVerdict verdict_of(CueClass c) {
  switch (c) {
    case CueClass::Affirm: return ComponentVerdict::Present;
    case CueClass::Negate: return ComponentVerdict::Absent;
    default: return ComponentVerdict::Uncertain;
  }
}

struct ComponentMention {
  std::size_t pos;  // offset of '('
  char letter;
};

std::vector<ComponentMention> component_mentions(std::string_view text) {
  std::vector<ComponentMention> out;
  for (std::size_t i = 0; i + 2 < text.size(); ++i) {
    if (text[i] == '(' && text[i + 1] >= 'A' && text[i + 1] <= 'Z' && text[i + 2] == ')')
      out.push_back({i, text[i + 1]});
  }
  return out;
}

ComponentVerdict polarity_at(std::string_view sentence, std::size_t mention_pos,
                             const CueTable& cues) {
  const auto clauses = textx::clause_spans(sentence);
  CueClass carry = CueClass::None;
  for (const auto& clause : clauses) {
    const std::string_view body = sentence.substr(clause.begin, clause.end - clause.begin);
    const CueClass own = classify_cues(body, cues);
    const bool holds_mention = mention_pos >= clause.begin && mention_pos < clause.end;
    if (holds_mention) return verdict_of(own != CueClass::None ? own : carry);
    if (own != CueClass::None) carry = own;
  }
  // Mention fell on a delimiter; fall back to the whole sentence.
  return verdict_of(classify_cues(sentence, cues));
}

struct LevelMention {
  std::size_t pos;
  ProficiencyLevel level;
};

std::vector<LevelMention> level_mentions(std::string_view text) {
  std::vector<LevelMention> out;
  for (int i = 0; i < assess::kLevelCount; ++i) {
    const auto level = static_cast<ProficiencyLevel>(i);
    for (std::size_t pos : textx::find_all_words(text, assess::level_name(level)))
      out.push_back({pos, level});
  }
  std::sort(out.begin(), out.end(),
            [](const LevelMention& a, const LevelMention& b) { return a.pos < b.pos; });
  return out;
}

struct MarkerHit {
  std::size_t pos;
  int index;
};

/// All "Drawing N" / "Image N" / ordinal-word drawing markers, by position.
std::vector<MarkerHit> marker_hits(std::string_view text) {
  std::vector<MarkerHit> hits;
  static constexpr std::array<std::string_view, 2> kNouns = {"drawing", "image"};
  for (const auto& noun : kNouns) {
    for (std::size_t pos : textx::find_all_words(text, noun)) {
      std::size_t p = pos + noun.size();
      while (p < text.size() && (text[p] == ' ' || text[p] == '#')) ++p;
      if (p < text.size() && std::isdigit(static_cast<unsigned char>(text[p]))) {
        int value = 0;
        while (p < text.size() && std::isdigit(static_cast<unsigned char>(text[p]))) {
          value = value * 10 + (text[p] - '0');
          ++p;
        }
        hits.push_back({pos, value});
      }
    }
  }
  static constexpr std::array<std::string_view, 3> kOrdinals = {"first", "second", "third"};
  for (int i = 0; i < 3; ++i) {
    for (std::size_t pos : textx::find_all_words(text, kOrdinals[i])) {
      std::size_t p = pos + kOrdinals[i].size();
      while (p < text.size() && text[p] == ' ') ++p;
      if (textx::find_word(text, "drawing", p) == p) hits.push_back({pos, i + 1});
    }
  }
  std::sort(hits.begin(), hits.end(),
            [](const MarkerHit& a, const MarkerHit& b) { return a.pos < b.pos; });
  return hits;
}

struct Segment {
  int index;
  std::size_t begin;
  std::size_t end;
};

/// Accept markers in strictly increasing index order, capped at `expected`;
/// repeats and out-of-order mentions inside a block do not re-segment.
std::vector<Segment> segment(std::string_view text, int expected) {
  std::vector<Segment> segments;
  int current = 0;
  for (const auto& hit : marker_hits(text)) {
    if (hit.index <= current || hit.index > expected) continue;
    if (!segments.empty()) segments.back().end = hit.pos;
    segments.push_back({hit.index, hit.pos, text.size()});
    current = hit.index;
  }
  return segments;
}

bool rationale_shaped(std::string_view block, const CueTable& cues) {
  if (level_mentions(block).empty()) return false;
  for (const auto& sentence : textx::sentence_spans(block)) {
    const std::string_view body = block.substr(sentence.begin, sentence.end - sentence.begin);
    if (component_mentions(body).empty()) continue;
    if (classify_cues(body, cues) != CueClass::None) return true;
  }
  return false;
}

}  // namespace

const CueTable& CueTable::builtin() { return kBuiltinCues; }

CueTable CueTable::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::InvalidConfig, "cannot open cue table: " + path.string());
  CueTable table;
  std::vector<std::string>* section = nullptr;
  std::string line;
  while (std::getline(in, line)) {
    std::string entry = textx::trim(line);
    if (entry.empty() || entry[0] == '#') continue;
    std::string token = textx::to_lower(entry);
    token.erase(std::remove_if(token.begin(), token.end(),
                               [](char c) { return c == '[' || c == ']' || c == ':'; }),
                token.end());
    if (token == "affirm") {
      section = &table.affirm;
    } else if (token == "negate") {
      section = &table.negate;
    } else if (token == "hedge") {
      section = &table.hedge;
    } else {
      if (section == nullptr)
        raise(Errc::InvalidConfig, "cue before any section header: " + entry);
      section->push_back(textx::to_lower(entry));
    }
  }
  return table;
}

void CueTable::write_file(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::PersistenceError, "cannot write cue table: " + path.string());
  auto section = [&](const char* name, const std::vector<std::string>& cues) {
    out << '[' << name << "]\n";
    for (const auto& cue : cues) out << cue << '\n';
  };
  section("AFFIRM", affirm);
  section("NEGATE", negate);
  section("HEDGE", hedge);
}

std::string CueTable::digest() const {
  std::string joined;
  for (const auto* list : {&affirm, &negate, &hedge}) {
    for (const auto& cue : *list) {
      joined += cue;
      joined += '\n';
    }
    joined += "--\n";
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(joined)));
  return buf;
}

std::string_view issue_name(IssueKind k) {
  switch (k) {
    case IssueKind::MissingDrawingSegment: return "MissingDrawingSegment";
    case IssueKind::NoFinalLabel: return "NoFinalLabel";
    case IssueKind::ConflictingLabels: return "ConflictingLabels";
    case IssueKind::UnknownComponent: return "UnknownComponent";
    case IssueKind::MissingComponentVerdict: return "MissingComponentVerdict";
    case IssueKind::RubricInconsistency: return "RubricInconsistency";
  }
  return "MissingDrawingSegment";
}

std::optional<IssueKind> parse_issue_kind(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(IssueKind::RubricInconsistency); ++i) {
    const auto kind = static_cast<IssueKind>(i);
    if (name == issue_name(kind)) return kind;
  }
  return std::nullopt;
}

ComponentVerdict polarity(std::string_view sentence, char component_letter,
                          const CueTable& cues) {
  const std::string marker = std::string("(") + component_letter + ")";
  const std::size_t pos = sentence.find(marker);
  if (pos == std::string_view::npos) return verdict_of(classify_cues(sentence, cues));
  return polarity_at(sentence, pos, cues);
}

bool check_retrieval_echo(std::string_view text, const CueTable& cues) {
  constexpr int kMaxDrawingIndex = 3;
  const auto segments = segment(text, kMaxDrawingIndex);
  const std::size_t preamble_end = segments.empty() ? text.size() : segments.front().begin;
  return rationale_shaped(text.substr(0, preamble_end), cues);
}

ParsedResponse parse(std::string_view text, int expected, const assess::Rubric& rubric,
                     const CueTable& cues) {
  ParsedResponse out;
  const auto segments = segment(text, expected);

  const std::size_t preamble_end = segments.empty() ? text.size() : segments.front().begin;
  out.retrieval_echo_found = rationale_shaped(text.substr(0, preamble_end), cues);

  std::set<int> found;
  for (const auto& seg : segments) {
    found.insert(seg.index);
    const std::string_view body = text.substr(seg.begin, seg.end - seg.begin);

    DrawingAssessment assessment;
    assessment.index = seg.index;
    assessment.rationale_span = {seg.begin, seg.end};

    std::set<char> unknown_reported;
    for (const auto& sentence : textx::sentence_spans(body)) {
      const std::string_view stext = body.substr(sentence.begin, sentence.end - sentence.begin);
      for (const auto& mention : component_mentions(stext)) {
        if (!rubric.has_component(mention.letter)) {
          if (unknown_reported.insert(mention.letter).second)
            out.issues.push_back({IssueKind::UnknownComponent, seg.index,
                                  std::string("component (") + mention.letter +
                                      ") is not declared by the rubric"});
          continue;
        }
        assessment.verdicts[mention.letter] = polarity_at(stext, mention.pos, cues);
      }
    }

    const auto levels = level_mentions(body);
    if (levels.empty()) {
      out.issues.push_back({IssueKind::NoFinalLabel, seg.index, "no level stated"});
    } else {
      assessment.final_level = levels.back().level;
      for (const auto& mention : levels) {
        if (mention.level != levels.back().level) {
          out.issues.push_back({IssueKind::ConflictingLabels, seg.index,
                                "segment states distinct levels; keeping the last mention"});
          break;
        }
      }
    }

    bool complete = true;
    for (const auto& component : rubric.components) {
      if (!assessment.verdicts.contains(component.letter)) {
        complete = false;
        out.issues.push_back({IssueKind::MissingComponentVerdict, seg.index,
                              std::string("no verdict for component (") + component.letter + ")"});
      }
    }
    if (complete && assessment.final_level.has_value()) {
      const auto derived = assess::classify(assessment.verdicts, rubric.rule);
      if (derived != *assessment.final_level)
        out.issues.push_back(
            {IssueKind::RubricInconsistency, seg.index,
             "stated level " + std::string(assess::level_name(*assessment.final_level)) +
                 " but verdicts classify as " + std::string(assess::level_name(derived))});
    }
    out.assessments.push_back(std::move(assessment));
  }

  for (int n = 1; n <= expected; ++n) {
    if (!found.contains(n))
      out.issues.push_back({IssueKind::MissingDrawingSegment, n,
                            "drawing " + std::to_string(n) + " never addressed"});
  }
  return out;
}

}  // namespace nerif::parser
