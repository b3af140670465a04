#pragma once

#include <filesystem>
#include <string>

#include "nerif/assessment.hpp"
#include "nerif/gateway.hpp"
#include "nerif/metrics.hpp"
#include "nerif/response_parser.hpp"

namespace nerif::io {

/// Task definition JSON schema:
///   {
///     "task_id": "M3-1",
///     "context_text": "...",
///     "context_image": "context.png",
///     "rubric": {
///       "components": [{"letter": "A", "description": "..."}, ...],
///       "rule": {"component_count": 4, "proficient_min": 4, "developing_min": 2},
///       "notes": {"A": "...", ...}
///     },
///     "examples": [{"drawing": "ex1.png", "label": "Proficient", "rationale": "..."}, ...]
///   }
/// Raster references are paths relative to the task file's directory.
assess::TaskDefinition load_task_file(const std::filesystem::path& path);
void save_task_file(const assess::TaskDefinition& task, const std::filesystem::path& path);

std::string task_to_json(const assess::TaskDefinition& task);
assess::TaskDefinition task_from_json(const std::string& text,
                                      const std::filesystem::path& base_dir);

std::string rubric_to_json(const assess::Rubric& rubric);
assess::Rubric rubric_from_json(const std::string& text);

/// Oracle script schema: {"seed": 1, "labels": {"case": "Developing", ...},
/// "verdicts": {"case": {"A": "Present", ...}, ...}, "noise": [[...], [...], [...]]}
vlm::OracleScript load_oracle_script(const std::filesystem::path& path);
void save_oracle_script(const vlm::OracleScript& script, const std::filesystem::path& path);

std::string parsed_to_json(const parser::ParsedResponse& parsed);

std::string metrics_to_json(const metrics::MetricsReport& report);
std::string confusion_to_json(const metrics::ConfusionMatrix& m);

}  // namespace nerif::io
