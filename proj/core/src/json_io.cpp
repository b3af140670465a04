#include "nerif/json_io.hpp"

#include <fstream>

#include "json_conv.hpp"
#include "nerif/error.hpp"

namespace nerif::jsonx {

json rubric_json(const assess::Rubric& rubric) {
  json components = json::array();
  for (const auto& c : rubric.components)
    components.push_back({{"letter", std::string(1, c.letter)}, {"description", c.description}});
  json notes = json::object();
  for (const auto& [letter, note] : rubric.notes) notes[std::string(1, letter)] = note;
  return {{"components", components},
          {"rule",
           {{"component_count", rubric.rule.component_count},
            {"proficient_min", rubric.rule.proficient_min},
            {"developing_min", rubric.rule.developing_min}}},
          {"notes", notes}};
}

assess::Rubric rubric_from(const json& j) {
  assess::Rubric rubric;
  for (const auto& c : j.at("components")) {
    const std::string letter = c.at("letter").get<std::string>();
    if (letter.size() != 1)
      raise(Errc::InvalidConfig, "component letter must be a single character: " + letter);
    rubric.components.push_back({letter[0], c.value("description", "")});
  }
  const auto& rule = j.at("rule");
  rubric.rule.component_count = rule.at("component_count").get<int>();
  rubric.rule.proficient_min = rule.at("proficient_min").get<int>();
  rubric.rule.developing_min = rule.at("developing_min").get<int>();
  if (j.contains("notes")) {
    for (const auto& [letter, note] : j.at("notes").items()) {
      if (letter.size() != 1)
        raise(Errc::InvalidConfig, "note key must be a single component letter: " + letter);
      rubric.notes[letter[0]] = note.get<std::string>();
    }
  }
  return rubric;
}

json task_json(const assess::TaskDefinition& task) {
  json examples = json::array();
  for (const auto& e : task.examples)
    examples.push_back({{"drawing", e.drawing},
                        {"label", std::string(assess::level_name(e.label))},
                        {"rationale", e.rationale}});
  return {{"task_id", task.task_id},
          {"context_text", task.context_text},
          {"context_image", task.context_image},
          {"rubric", rubric_json(task.rubric)},
          {"examples", examples}};
}

assess::TaskDefinition task_from(const json& j, const std::filesystem::path& base_dir) {
  assess::TaskDefinition task;
  task.task_id = j.at("task_id").get<std::string>();
  task.context_text = j.at("context_text").get<std::string>();
  task.context_image = j.at("context_image").get<std::string>();
  task.rubric = rubric_from(j.at("rubric"));
  if (j.contains("examples")) {
    for (const auto& e : j.at("examples")) {
      const auto label = assess::parse_level(e.at("label").get<std::string>());
      if (!label)
        raise(Errc::UnparsableLabel,
              "example label: " + e.at("label").get<std::string>());
      task.examples.push_back({e.at("drawing").get<std::string>(), *label,
                               e.value("rationale", "")});
    }
  }
  task.base_dir = base_dir;
  return task;
}

json script_json(const vlm::OracleScript& script) {
  json labels = json::object();
  for (const auto& [case_id, level] : script.hidden_labels)
    labels[case_id] = std::string(assess::level_name(level));
  json verdicts = json::object();
  for (const auto& [case_id, vs] : script.hidden_verdicts) {
    json entry = json::object();
    for (const auto& [letter, v] : vs)
      entry[std::string(1, letter)] = std::string(assess::verdict_name(v));
    verdicts[case_id] = entry;
  }
  json out = {{"seed", script.seed}, {"labels", labels}, {"verdicts", verdicts}};
  if (script.noise_matrix) {
    json rows = json::array();
    for (const auto& row : *script.noise_matrix) rows.push_back({row[0], row[1], row[2]});
    out["noise"] = rows;
  }
  return out;
}

vlm::OracleScript script_from(const json& j) {
  vlm::OracleScript script;
  script.seed = j.value("seed", 0ull);
  for (const auto& [case_id, name] : j.at("labels").items()) {
    const auto level = assess::parse_level(name.get<std::string>());
    if (!level) raise(Errc::UnparsableLabel, "oracle label for " + case_id);
    script.hidden_labels[case_id] = *level;
  }
  if (j.contains("verdicts")) {
    for (const auto& [case_id, entry] : j.at("verdicts").items()) {
      assess::VerdictMap vs;
      for (const auto& [letter, name] : entry.items()) {
        const auto v = assess::parse_verdict(name.get<std::string>());
        if (!v || letter.size() != 1)
          raise(Errc::InvalidConfig, "bad oracle verdict for " + case_id);
        vs[letter[0]] = *v;
      }
      script.hidden_verdicts[case_id] = std::move(vs);
    }
  }
  if (j.contains("noise")) {
    std::array<std::array<double, 3>, 3> noise{};
    const auto& rows = j.at("noise");
    if (!rows.is_array() || rows.size() != 3)
      raise(Errc::InvalidConfig, "noise matrix must be 3x3");
    for (int i = 0; i < 3; ++i) {
      if (!rows[i].is_array() || rows[i].size() != 3)
        raise(Errc::InvalidConfig, "noise matrix must be 3x3");
      for (int k = 0; k < 3; ++k) noise[i][k] = rows[i][k].get<double>();
    }
    script.noise_matrix = noise;
  }
  vlm::validate_script(script);
  return script;
}

json parsed_json(const parser::ParsedResponse& parsed) {
  json assessments = json::array();
  for (const auto& a : parsed.assessments) {
    json verdicts = json::object();
    for (const auto& [letter, v] : a.verdicts)
      verdicts[std::string(1, letter)] = std::string(assess::verdict_name(v));
    assessments.push_back(
        {{"index", a.index},
         {"verdicts", verdicts},
         {"final_level",
          a.final_level ? json(std::string(assess::level_name(*a.final_level))) : json(nullptr)},
         {"span", {{"begin", a.rationale_span.begin}, {"end", a.rationale_span.end}}}});
  }
  json issues = json::array();
  for (const auto& issue : parsed.issues) {
    issues.push_back({{"kind", std::string(parser::issue_name(issue.kind))},
                      {"drawing_index",
                       issue.drawing_index ? json(*issue.drawing_index) : json(nullptr)},
                      {"detail", issue.detail}});
  }
  return {{"retrieval_echo_found", parsed.retrieval_echo_found},
          {"assessments", assessments},
          {"issues", issues}};
}

json report_json(const metrics::MetricsReport& r) {
  return {{"accuracy", r.accuracy},
          {"acc_per_class", {r.acc_per_class[0], r.acc_per_class[1], r.acc_per_class[2]}},
          {"precision_macro", r.precision_macro},
          {"recall_macro", r.recall_macro},
          {"f1_macro", r.f1_macro},
          {"kappa_qw", r.degenerate_agreement ? json(nullptr) : json(r.kappa_qw)},
          {"degenerate_agreement", r.degenerate_agreement}};
}

metrics::MetricsReport report_from(const json& j) {
  metrics::MetricsReport r;
  r.accuracy = j.at("accuracy").get<double>();
  for (int i = 0; i < 3; ++i) r.acc_per_class[i] = j.at("acc_per_class")[i].get<double>();
  r.precision_macro = j.at("precision_macro").get<double>();
  r.recall_macro = j.at("recall_macro").get<double>();
  r.f1_macro = j.at("f1_macro").get<double>();
  r.degenerate_agreement = j.value("degenerate_agreement", false);
  r.kappa_qw = r.degenerate_agreement || j.at("kappa_qw").is_null()
                   ? std::numeric_limits<double>::quiet_NaN()
                   : j.at("kappa_qw").get<double>();
  return r;
}

json confusion_json(const metrics::ConfusionMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < 3; ++i)
    rows.push_back({m.counts[i][0], m.counts[i][1], m.counts[i][2]});
  return rows;
}

metrics::ConfusionMatrix confusion_from(const json& j) {
  metrics::ConfusionMatrix m;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) m.counts[i][k] = j.at(i).at(k).get<std::int64_t>();
  return m;
}

json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::PersistenceError, "cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    raise(Errc::PersistenceError, path.string() + " is not valid JSON: " + e.what());
  }
  return j;
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Errc::PersistenceError, "cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) raise(Errc::PersistenceError, "short write: " + path.string());
}

}  // namespace nerif::jsonx

namespace nerif::io {

using jsonx::json;

assess::TaskDefinition load_task_file(const std::filesystem::path& path) {
  const json j = jsonx::load_json_file(path);
  return jsonx::task_from(j, path.has_parent_path() ? path.parent_path()
                                                    : std::filesystem::path("."));
}

void save_task_file(const assess::TaskDefinition& task, const std::filesystem::path& path) {
  jsonx::write_json_file(path, jsonx::task_json(task));
}

std::string task_to_json(const assess::TaskDefinition& task) {
  return jsonx::task_json(task).dump(2);
}

assess::TaskDefinition task_from_json(const std::string& text,
                                      const std::filesystem::path& base_dir) {
  return jsonx::task_from(json::parse(text), base_dir);
}

std::string rubric_to_json(const assess::Rubric& rubric) {
  return jsonx::rubric_json(rubric).dump(2);
}

assess::Rubric rubric_from_json(const std::string& text) {
  return jsonx::rubric_from(json::parse(text));
}

vlm::OracleScript load_oracle_script(const std::filesystem::path& path) {
  return jsonx::script_from(jsonx::load_json_file(path));
}

void save_oracle_script(const vlm::OracleScript& script, const std::filesystem::path& path) {
  jsonx::write_json_file(path, jsonx::script_json(script));
}

std::string parsed_to_json(const parser::ParsedResponse& parsed) {
  return jsonx::parsed_json(parsed).dump(2);
}

std::string metrics_to_json(const metrics::MetricsReport& report) {
  return jsonx::report_json(report).dump(2);
}

std::string confusion_to_json(const metrics::ConfusionMatrix& m) {
  return jsonx::confusion_json(m).dump();
}

}  // namespace nerif::io
