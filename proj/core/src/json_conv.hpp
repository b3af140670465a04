#pragma once

// Internal nlohmann <-> domain type converters shared by json_io.cpp and
// orchestrator.cpp. Not installed; the public surface is nerif/json_io.hpp.

#include <filesystem>

#include <json.hpp>

#include "nerif/assessment.hpp"
#include "nerif/gateway.hpp"
#include "nerif/metrics.hpp"
#include "nerif/response_parser.hpp"

namespace nerif::jsonx {

using nlohmann::json;

json rubric_json(const assess::Rubric& rubric);
assess::Rubric rubric_from(const json& j);

json task_json(const assess::TaskDefinition& task);
assess::TaskDefinition task_from(const json& j, const std::filesystem::path& base_dir);

json script_json(const vlm::OracleScript& script);
vlm::OracleScript script_from(const json& j);

json parsed_json(const parser::ParsedResponse& parsed);

json report_json(const metrics::MetricsReport& report);
metrics::MetricsReport report_from(const json& j);

json confusion_json(const metrics::ConfusionMatrix& m);
metrics::ConfusionMatrix confusion_from(const json& j);

json load_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const json& j);

}  // namespace nerif::jsonx
