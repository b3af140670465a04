#include "nerif/assessment.hpp"

#include <algorithm>
#include <array>

#include "nerif/error.hpp"
#include "text.hpp"

namespace nerif::assess {

namespace {

constexpr std::array<std::string_view, 3> kLevelNames = {"Beginning", "Developing", "Proficient"};
constexpr std::array<std::string_view, 3> kVerdictNames = {"Present", "Absent", "Uncertain"};

}  // namespace

ProficiencyLevel level_from_ordinal(int o) {
  if (o < 0 || o > 2) raise(Errc::UnparsableLabel, "level ordinal out of range");
  return static_cast<ProficiencyLevel>(o);
}

std::string_view level_name(ProficiencyLevel l) { return kLevelNames[ordinal(l)]; }

std::optional<ProficiencyLevel> parse_level(std::string_view name) {
  const std::string lowered = textx::to_lower(textx::trim(name));
  for (int i = 0; i < kLevelCount; ++i) {
    if (lowered == textx::to_lower(kLevelNames[i])) return static_cast<ProficiencyLevel>(i);
  }
  return std::nullopt;
}

std::string_view verdict_name(ComponentVerdict v) {
  return kVerdictNames[static_cast<int>(v)];
}

std::optional<ComponentVerdict> parse_verdict(std::string_view name) {
  const std::string lowered = textx::to_lower(textx::trim(name));
  for (int i = 0; i < 3; ++i) {
    if (lowered == textx::to_lower(kVerdictNames[i])) return static_cast<ComponentVerdict>(i);
  }
  return std::nullopt;
}

const ComponentId* Rubric::find(char letter) const {
  for (const auto& c : components) {
    if (c.letter == letter) return &c;
  }
  return nullptr;
}

std::filesystem::path TaskDefinition::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

ProficiencyLevel classify(const VerdictMap& verdicts, const ProficiencyRule& rule,
                          UncertainPolicy policy) {
  if (static_cast<int>(verdicts.size()) != rule.component_count)
    raise(Errc::InvalidVerdictSet,
          "expected " + std::to_string(rule.component_count) + " verdicts, got " +
              std::to_string(verdicts.size()));
  int present = 0;
  for (const auto& [letter, verdict] : verdicts) {
    if (verdict == ComponentVerdict::Present) ++present;
    if (verdict == ComponentVerdict::Uncertain && policy == UncertainPolicy::Lenient) ++present;
  }
  if (present >= rule.proficient_min) return ProficiencyLevel::Proficient;
  if (present >= rule.developing_min) return ProficiencyLevel::Developing;
  return ProficiencyLevel::Beginning;
}

ProficiencyLevel classify_for(const Rubric& rubric, const VerdictMap& verdicts,
                              UncertainPolicy policy) {
  for (const auto& [letter, verdict] : verdicts) {
    if (!rubric.has_component(letter))
      raise(Errc::InvalidVerdictSet, std::string("verdict for undeclared component (") + letter +
                                         ")");
  }
  for (const auto& component : rubric.components) {
    if (!verdicts.contains(component.letter))
      raise(Errc::InvalidVerdictSet,
            std::string("missing verdict for component (") + component.letter + ")");
  }
  return classify(verdicts, rubric.rule, policy);
}

std::vector<Finding> validate_rubric(const Rubric& rubric) {
  std::vector<Finding> findings;
  const int n = static_cast<int>(rubric.components.size());

  if (n < 2 || n > 4)
    findings.push_back({"ComponentCountOutOfRange",
                        "rubric holds " + std::to_string(n) + " components, expected 2-4"});
  for (const auto& c : rubric.components) {
    if (c.letter < 'A' || c.letter > 'D')
      findings.push_back({"BadComponentLetter", std::string("component letter '") + c.letter +
                                                    "' outside A-D"});
  }
  for (std::size_t i = 0; i < rubric.components.size(); ++i) {
    for (std::size_t j = i + 1; j < rubric.components.size(); ++j) {
      if (rubric.components[i].letter == rubric.components[j].letter) {
        findings.push_back({"DuplicateComponent",
                            std::string("component letter '") + rubric.components[i].letter +
                                "' declared more than once"});
      }
    }
  }
  if (rubric.rule.component_count != n)
    findings.push_back({"RuleCountMismatch",
                        "rule.component_count=" + std::to_string(rubric.rule.component_count) +
                            " but rubric declares " + std::to_string(n)});
  const auto& r = rubric.rule;
  if (!(1 <= r.developing_min && r.developing_min <= r.proficient_min &&
        r.proficient_min <= r.component_count))
    findings.push_back({"ThresholdOutOfRange",
                        "need 1 <= developing_min <= proficient_min <= component_count, got (" +
                            std::to_string(r.developing_min) + ", " +
                            std::to_string(r.proficient_min) + ", " +
                            std::to_string(r.component_count) + ")"});
  for (const auto& [letter, note] : rubric.notes) {
    if (!rubric.has_component(letter))
      findings.push_back({"UnknownNoteComponent",
                          std::string("note attached to undeclared component (") + letter + ")"});
  }
  return findings;
}

std::vector<Finding> validate_task(const TaskDefinition& task) {
  std::vector<Finding> findings = validate_rubric(task.rubric);
  if (textx::trim(task.context_text).empty())
    findings.push_back({"EmptyContext", "task " + task.task_id + " has no problem context text"});
  if (task.examples.size() != 9)
    findings.push_back({"ExampleCountNotNine", "standard runs require 9 scoring examples, got " +
                                                   std::to_string(task.examples.size())});
  for (std::size_t i = 0; i < task.examples.size(); ++i) {
    for (const auto& component : task.rubric.components) {
      const std::string marker = std::string("(") + component.letter + ")";
      std::size_t hits = 0, pos = 0;
      const std::string& rationale = task.examples[i].rationale;
      while ((pos = rationale.find(marker, pos)) != std::string::npos) {
        ++hits;
        pos += marker.size();
      }
      if (hits != 1)
        findings.push_back({"ExampleRationaleComponentCoverage",
                            "example " + std::to_string(i + 1) + " mentions " + marker + " " +
                                std::to_string(hits) + " times, expected exactly once"});
    }
  }
  return findings;
}

namespace {

// Cues that let one of two level mentions take precedence.
constexpr std::array<std::string_view, 4> kNegationCues = {"not", "rather than", "instead of",
                                                           "than"};
constexpr std::array<std::string_view, 7> kFinalityCues = {"final",    "overall", "therefore",
                                                           "deduced",  "deduce",  "conclusion",
                                                           "level is"};

struct Mention {
  std::size_t pos;
  ProficiencyLevel level;
  bool negated;
  bool final_cue;
};

}  // namespace

LevelScan level_from_text(std::string_view fragment) {
  std::vector<Mention> mentions;
  for (int i = 0; i < kLevelCount; ++i) {
    const auto level = static_cast<ProficiencyLevel>(i);
    for (std::size_t pos : textx::find_all_words(fragment, level_name(level)))
      mentions.push_back({pos, level, false, false});
  }
  if (mentions.empty()) return {LevelScanStatus::NotFound, ProficiencyLevel::Beginning};
  std::sort(mentions.begin(), mentions.end(),
            [](const Mention& a, const Mention& b) { return a.pos < b.pos; });

  // Cue window: up to 28 chars back, never across the previous level word.
  for (std::size_t i = 0; i < mentions.size(); ++i) {
    std::size_t window_begin = mentions[i].pos > 28 ? mentions[i].pos - 28 : 0;
    if (i > 0) {
      const std::size_t prev_end =
          mentions[i - 1].pos + level_name(mentions[i - 1].level).size();
      window_begin = std::max(window_begin, prev_end);
    }
    const std::string_view window =
        fragment.substr(window_begin, mentions[i].pos - window_begin);
    for (const auto& cue : kNegationCues)
      if (textx::contains_word(window, cue)) mentions[i].negated = true;
    for (const auto& cue : kFinalityCues)
      if (textx::contains_word(window, cue)) mentions[i].final_cue = true;
  }

  auto distinct = [](const std::vector<Mention>& ms) {
    for (std::size_t i = 1; i < ms.size(); ++i)
      if (ms[i].level != ms[0].level) return true;
    return false;
  };
  if (!distinct(mentions)) return {LevelScanStatus::Found, mentions[0].level};

  // Distinct level words: drop negated mentions first, then prefer
  // finality-cued ones; whatever remains must agree.
  std::vector<Mention> live;
  for (const auto& m : mentions)
    if (!m.negated) live.push_back(m);
  if (live.empty()) return {LevelScanStatus::Ambiguous, ProficiencyLevel::Beginning};
  if (!distinct(live)) return {LevelScanStatus::Found, live[0].level};

  std::vector<Mention> cued;
  for (const auto& m : live)
    if (m.final_cue) cued.push_back(m);
  if (!cued.empty() && !distinct(cued)) return {LevelScanStatus::Found, cued[0].level};

  return {LevelScanStatus::Ambiguous, ProficiencyLevel::Beginning};
}

}  // namespace nerif::assess
