#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nerif/assessment.hpp"

namespace nerif::parser {

/// Polarity cue words for component-verdict sentences. The tables are plain
/// configuration (sections AFFIRM/NEGATE/HEDGE, one cue per line) so parser
/// tuning stays auditable; the builtin table matches cue_table.txt as shipped.
struct CueTable {
  std::vector<std::string> affirm;
  std::vector<std::string> negate;
  std::vector<std::string> hedge;

  static const CueTable& builtin();
  static CueTable from_file(const std::filesystem::path& path);
  void write_file(const std::filesystem::path& path) const;
  std::string digest() const;
};

enum class IssueKind {
  MissingDrawingSegment,
  NoFinalLabel,
  ConflictingLabels,
  UnknownComponent,
  MissingComponentVerdict,
  RubricInconsistency,
};

std::string_view issue_name(IssueKind k);
std::optional<IssueKind> parse_issue_kind(std::string_view name);

struct ParseIssue {
  IssueKind kind = IssueKind::MissingDrawingSegment;
  std::optional<int> drawing_index;
  std::string detail;
};

struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Structured extraction for one drawing segment of the transcript.
struct DrawingAssessment {
  int index = 0;  // 1-based drawing position
  assess::VerdictMap verdicts;
  std::optional<assess::ProficiencyLevel> final_level;  // nullopt = NotFound
  TextSpan rationale_span;
};

struct ParsedResponse {
  bool retrieval_echo_found = false;
  std::vector<DrawingAssessment> assessments;
  std::vector<ParseIssue> issues;
};

/// Tolerant grammar over the model's free text. Segments on drawing markers
/// ("Drawing N", "Image N", "first/second/third drawing"), classifies each
/// (X) component mention through the cue table (negation outranks
/// affirmation within a clause; hedges win over both; no cue means
/// Uncertain), takes the last level mention per segment as the final label,
/// and flags everything anomalous as a ParseIssue. Never throws.
ParsedResponse parse(std::string_view text, int expected, const assess::Rubric& rubric,
                     const CueTable& cues = CueTable::builtin());

/// Verdict for one component mention within a sentence. List continuations
/// inherit the polarity of the previous clause ("includes (A), (C), but not
/// (B)" marks (C) Present and (B) Absent).
assess::ComponentVerdict polarity(std::string_view sentence, char component_letter,
                                  const CueTable& cues = CueTable::builtin());

/// True iff a rationale-shaped block (a component-verdict sentence plus a
/// level mention) precedes the first drawing marker.
bool check_retrieval_echo(std::string_view text, const CueTable& cues = CueTable::builtin());

}  // namespace nerif::parser
