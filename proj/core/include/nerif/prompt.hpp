#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nerif/assessment.hpp"

namespace nerif::prompt {

using assess::TaskDefinition;

/// Full is the scored configuration; NoExamples and NoNotes exist for
/// ablation runs only.
enum class PromptVariant {
  Full,
  NoExamples,
  NoNotes,
};

std::string_view variant_name(PromptVariant v);
std::optional<PromptVariant> parse_variant(std::string_view name);

enum class AttachmentRole {
  ReferenceSheet,
  TestSheet,
};

/// The single-turn prompt: seven sections of text plus a fixed two-slot
/// attachment plan (reference sheet first, test sheet second).
struct CompiledPrompt {
  std::string text;
  std::array<AttachmentRole, 2> attachment_plan = {AttachmentRole::ReferenceSheet,
                                                   AttachmentRole::TestSheet};
  std::string digest;  // deterministic content hash of text
};

/// Section wording lives in editable template files; the compiler only fills
/// placeholders and assembles sections. A placeholder alone on a line whose
/// value is empty deletes the line, which keeps ablation variants pure line
/// subsets of Full.
struct TemplateSet {
  std::string role;
  std::string task;
  std::string context;
  std::string rubric;
  std::string examples;
  std::string drawings;
  std::string decoding;

  static const TemplateSet& builtin();
  /// Reads role.txt, task.txt, context.txt, rubric.txt, examples.txt,
  /// drawings.txt, decoding.txt from a directory.
  static TemplateSet from_dir(const std::filesystem::path& dir);
  void write_dir(const std::filesystem::path& dir) const;
};

/// Markers embedded in the compiled text, in section order. The Role section
/// has no marker: the prompt opens with the role sentence itself.
inline constexpr std::array<std::string_view, 6> kSectionMarkers = {
    "## TASK", "## PROBLEM CONTEXT", "## RUBRIC", "## EXAMPLES", "## DRAWINGS TO SCORE",
    "## DECODING"};

struct CompileOptions {
  int expected_drawings = 3;
  double temperature = 0.0;
  double top_p = 0.01;
  const TemplateSet* templates = nullptr;  // null means builtin
};

/// Assemble the prompt for a task and variant. Throws EmptyContext,
/// EmptyRubric, or InvalidTask (rubric invariants violated).
CompiledPrompt compile(const TaskDefinition& task, PromptVariant variant,
                       const CompileOptions& options = {});

std::string digest_text(std::string_view text);

struct LineDiff {
  enum class Op { Insert, Delete };
  Op op = Op::Insert;
  std::size_t line_index = 0;  // in b for inserts, in a for deletes
  std::string line;

  bool operator==(const LineDiff&) const = default;
};

/// Line-level differences turning a into b; empty iff the texts are equal.
std::vector<LineDiff> diff_variants(const CompiledPrompt& a, const CompiledPrompt& b);

}  // namespace nerif::prompt
