#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nerif::assess {

/// Trinomial ordinal label space: Beginning(0) < Developing(1) < Proficient(2).
enum class ProficiencyLevel : int {
  Beginning = 0,
  Developing = 1,
  Proficient = 2,
};

inline constexpr int kLevelCount = 3;

constexpr int ordinal(ProficiencyLevel l) { return static_cast<int>(l); }
ProficiencyLevel level_from_ordinal(int o);
std::string_view level_name(ProficiencyLevel l);

/// Closed label set; case-insensitive. nullopt for anything else.
std::optional<ProficiencyLevel> parse_level(std::string_view name);

/// Presence judgment for one rubric component in one drawing. Uncertain is
/// the bucket for hedged language ("may", "unclear", "partially").
enum class ComponentVerdict {
  Present,
  Absent,
  Uncertain,
};

std::string_view verdict_name(ComponentVerdict v);
std::optional<ComponentVerdict> parse_verdict(std::string_view name);

/// A lettered scoring aspect, (A)-(D).
struct ComponentId {
  char letter = 'A';
  std::string description;
};

/// Verdicts keyed by component letter (the letter is the component identity).
using VerdictMap = std::map<char, ComponentVerdict>;

/// Count thresholds mapping Present-counts to levels. The standard rule is
/// (all components, 2): Proficient needs every component, Developing at
/// least two, Beginning otherwise.
struct ProficiencyRule {
  int component_count = 4;
  int proficient_min = 4;
  int developing_min = 2;

  static ProficiencyRule standard(int component_count) {
    return {component_count, component_count, 2};
  }
};

struct Rubric {
  std::vector<ComponentId> components;  // ordered, 2-4 entries
  ProficiencyRule rule;
  std::map<char, std::string> notes;  // instructional note per component, may be sparse

  const ComponentId* find(char letter) const;
  bool has_component(char letter) const { return find(letter) != nullptr; }
};

/// One human-coded few-shot example: a drawing, its label, and the rationale
/// text that teaches the per-component verdict format.
struct ScoringExample {
  std::string drawing;  // raster reference, relative path
  ProficiencyLevel label = ProficiencyLevel::Beginning;
  std::string rationale;
};

struct TaskDefinition {
  std::string task_id;
  std::string context_text;
  std::string context_image;  // raster reference, relative path
  Rubric rubric;
  std::vector<ScoringExample> examples;  // exactly 9 for a standard run
  std::filesystem::path base_dir;        // resolved against for raster references

  std::filesystem::path resolve(const std::string& relative) const;
};

/// Structured result of scoring one case, either produced by classify() or
/// extracted from a model transcript.
struct CaseAssessment {
  std::string case_id;
  VerdictMap verdicts;
  ProficiencyLevel predicted = ProficiencyLevel::Beginning;
  std::string rationale_span;
};

/// How Uncertain verdicts count toward the Present total. Strict (the
/// default) treats them as Absent; Lenient as Present.
enum class UncertainPolicy {
  Strict,
  Lenient,
};

/// Map component verdicts to a proficiency level by Present-count against the
/// rule thresholds. Throws InvalidVerdictSet when the verdict count does not
/// match the rule's component count.
ProficiencyLevel classify(const VerdictMap& verdicts, const ProficiencyRule& rule,
                          UncertainPolicy policy = UncertainPolicy::Strict);

/// Same, but checks the verdict keys against the rubric's declared letters.
ProficiencyLevel classify_for(const Rubric& rubric, const VerdictMap& verdicts,
                              UncertainPolicy policy = UncertainPolicy::Strict);

/// A violated invariant, named. Empty detail means the code says it all.
struct Finding {
  std::string code;
  std::string detail;

  bool operator==(const Finding&) const = default;
};

/// Empty iff every Rubric/ProficiencyRule invariant holds.
/// Codes: BadComponentLetter, DuplicateComponent, ComponentCountOutOfRange,
/// RuleCountMismatch, ThresholdOutOfRange, UnknownNoteComponent.
std::vector<Finding> validate_rubric(const Rubric& rubric);

/// Rubric findings plus task-level ones: EmptyContext, ExampleCountNotNine,
/// ExampleRationaleComponentCoverage.
std::vector<Finding> validate_task(const TaskDefinition& task);

enum class LevelScanStatus {
  Found,
  NotFound,
  Ambiguous,
};

struct LevelScan {
  LevelScanStatus status = LevelScanStatus::NotFound;
  ProficiencyLevel level = ProficiencyLevel::Beginning;  // valid only when Found
};

/// Case-insensitive scan for a level word, tolerating quotes and punctuation.
/// Two distinct level words in one fragment yield Ambiguous unless a
/// precedence cue (a nearby negation, or a finality word such as "final" or
/// "level is") singles one out.
LevelScan level_from_text(std::string_view fragment);

}  // namespace nerif::assess
