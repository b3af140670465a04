#include <cmath>
#include <sstream>

#include "nerif/error.hpp"
#include "nerif/gateway.hpp"
#include "nerif/rng.hpp"

namespace nerif::vlm {

using assess::ComponentVerdict;
using assess::ProficiencyLevel;

namespace {

struct LevelRange {
  int low;
  int high;
};

/// Present-count interval that classifies to the given level under the rule.
LevelRange range_for(ProficiencyLevel level, const assess::ProficiencyRule& rule) {
  switch (level) {
    case ProficiencyLevel::Proficient: return {rule.proficient_min, rule.component_count};
    case ProficiencyLevel::Developing: return {rule.developing_min, rule.proficient_min - 1};
    case ProficiencyLevel::Beginning: return {0, rule.developing_min - 1};
  }
  return {0, 0};
}

assess::VerdictMap canonical_verdicts(ProficiencyLevel level, const assess::Rubric& rubric) {
  const auto range = range_for(level, rubric.rule);
  const int target = level == ProficiencyLevel::Proficient ? rubric.rule.component_count
                     : level == ProficiencyLevel::Developing ? range.low
                                                             : 0;
  assess::VerdictMap verdicts;
  int granted = 0;
  for (const auto& component : rubric.components) {
    verdicts[component.letter] =
        granted < target ? ComponentVerdict::Present : ComponentVerdict::Absent;
    ++granted;
  }
  return verdicts;
}

/// Fewest flips (in component order) that move the Present count into the
/// emitted level's range.
assess::VerdictMap adjust_for_level(assess::VerdictMap verdicts, ProficiencyLevel emitted,
                                    const assess::Rubric& rubric) {
  const auto range = range_for(emitted, rubric.rule);
  if (range.low > range.high)
    raise(Errc::InvalidConfig,
          std::string("level ") + std::string(assess::level_name(emitted)) +
              " is unreachable under the rubric rule");
  int present = 0;
  for (const auto& [letter, verdict] : verdicts)
    if (verdict == ComponentVerdict::Present) ++present;

  if (present < range.low) {
    int need = range.low - present;
    for (const auto& component : rubric.components) {
      if (need == 0) break;
      auto& v = verdicts[component.letter];
      if (v != ComponentVerdict::Present) {
        v = ComponentVerdict::Present;
        --need;
      }
    }
  } else if (present > range.high) {
    int drop = present - range.high;
    for (const auto& component : rubric.components) {
      if (drop == 0) break;
      auto& v = verdicts[component.letter];
      if (v == ComponentVerdict::Present) {
        v = ComponentVerdict::Absent;
        --drop;
      }
    }
  }
  return verdicts;
}

ProficiencyLevel sample_level(ProficiencyLevel truth, const OracleScript& script,
                              const std::string& case_id) {
  if (!script.noise_matrix) return truth;
  Rng rng(mix64(script.seed, fnv1a64(case_id)));
  const double u = rng.unit();
  const auto& row = (*script.noise_matrix)[assess::ordinal(truth)];
  double cumulative = 0.0;
  for (int j = 0; j < assess::kLevelCount; ++j) {
    cumulative += row[j];
    if (u < cumulative) return assess::level_from_ordinal(j);
  }
  return ProficiencyLevel::Proficient;
}

}  // namespace

void validate_script(const OracleScript& script) {
  if (!script.noise_matrix) return;
  for (int i = 0; i < assess::kLevelCount; ++i) {
    double sum = 0.0;
    for (int j = 0; j < assess::kLevelCount; ++j) {
      const double p = (*script.noise_matrix)[i][j];
      if (p < 0.0) raise(Errc::InvalidConfig, "noise matrix entries must be non-negative");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      raise(Errc::InvalidConfig,
            "noise matrix row " + std::to_string(i) + " sums to " + std::to_string(sum));
  }
}

std::string oracle_generate(const std::vector<std::string>& case_ids, const OracleScript& script,
                            const assess::Rubric& rubric) {
  validate_script(script);
  for (const auto& case_id : case_ids) {
    if (!script.hidden_labels.contains(case_id))
      raise(Errc::UnknownCase, "oracle script has no label for case " + case_id);
  }

  std::ostringstream out;
  out << "The problem context and the scoring rubric were retrieved from the first attached "
         "image.\n";
  // Echoed example rationale: evidence-of-processing block before Drawing 1.
  const char first_letter = rubric.components.empty() ? 'A' : rubric.components.front().letter;
  out << "One example evaluation from the reference sheet: the example drawing includes "
         "component ("
      << first_letter << "), and its proficiency level is 'Proficient.'\n\n";

  for (std::size_t i = 0; i < case_ids.size(); ++i) {
    const std::string& case_id = case_ids[i];
    const ProficiencyLevel truth = script.hidden_labels.at(case_id);
    const ProficiencyLevel emitted = sample_level(truth, script, case_id);

    assess::VerdictMap verdicts;
    if (auto it = script.hidden_verdicts.find(case_id); it != script.hidden_verdicts.end()) {
      verdicts = it->second;
    } else {
      verdicts = canonical_verdicts(truth, rubric);
    }
    verdicts = adjust_for_level(std::move(verdicts), emitted, rubric);

    out << "Drawing " << (i + 1) << ":\n";
    int present = 0;
    for (const auto& component : rubric.components) {
      switch (verdicts.at(component.letter)) {
        case ComponentVerdict::Present:
          out << "The drawing includes component (" << component.letter << ").\n";
          ++present;
          break;
        case ComponentVerdict::Absent:
          out << "The drawing does not include component (" << component.letter << ").\n";
          break;
        case ComponentVerdict::Uncertain:
          out << "It is unclear whether the drawing includes component (" << component.letter
              << ").\n";
          break;
      }
    }
    out << "In summary, " << present << " of the " << rubric.rule.component_count
        << " components are clearly included.\n";
    out << "Based on the rubric, the proficiency level is '" << assess::level_name(emitted)
        << ".'\n\n";
  }
  return out.str();
}

std::string oracle_generate(const data::Batch& batch, const OracleScript& script,
                            const assess::Rubric& rubric) {
  std::vector<std::string> ids;
  ids.reserve(batch.cases.size());
  for (const auto& rec : batch.cases) ids.push_back(rec.case_id);
  return oracle_generate(ids, script, rubric);
}

}  // namespace nerif::vlm
