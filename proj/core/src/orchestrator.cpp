#include "nerif/orchestrator.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <mutex>
#include <thread>

#include "json_conv.hpp"
#include "nerif/error.hpp"
#include "nerif/json_io.hpp"
#include "nerif/raster.hpp"
#include "nerif/rng.hpp"
#include "text.hpp"

namespace nerif::orch {

using jsonx::json;

std::string_view mode_name(RunMode m) {
  return m == RunMode::Validation ? "validation" : "test";
}

std::optional<RunMode> parse_mode(std::string_view name) {
  const std::string lowered = textx::to_lower(textx::trim(name));
  if (lowered == "validation") return RunMode::Validation;
  if (lowered == "test") return RunMode::Test;
  return std::nullopt;
}

std::string_view backend_name(BackendKind b) {
  switch (b) {
    case BackendKind::Remote: return "remote";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Oracle: return "oracle";
  }
  return "oracle";
}

std::optional<BackendKind> parse_backend(std::string_view name) {
  const std::string lowered = textx::to_lower(textx::trim(name));
  if (lowered == "remote") return BackendKind::Remote;
  if (lowered == "scripted") return BackendKind::Scripted;
  if (lowered == "oracle") return BackendKind::Oracle;
  return std::nullopt;
}

namespace {

std::string iso_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string zero4(int n) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d", n);
  return buf;
}

const char* stage_name(BatchRecord::Stage s) {
  switch (s) {
    case BatchRecord::Stage::Response: return "response";
    case BatchRecord::Stage::Complete: return "complete";
    case BatchRecord::Stage::Error: return "error";
  }
  return "response";
}

BatchRecord::Stage stage_from(const std::string& name) {
  if (name == "complete") return BatchRecord::Stage::Complete;
  if (name == "error") return BatchRecord::Stage::Error;
  return BatchRecord::Stage::Response;
}

json record_json(const BatchRecord& rec) {
  json j = {{"batch_id", rec.batch_id},
            {"stage", stage_name(rec.stage)},
            {"case_ids", rec.case_ids},
            {"request_id", rec.request_id},
            {"prompt_digest", rec.prompt_digest},
            {"request_at", rec.request_at},
            {"response_at", rec.response_at},
            {"latency_ms", rec.latency_ms},
            {"attempts", rec.attempts},
            {"backend", rec.backend},
            {"finish_state", rec.finish_state},
            {"raw_text", rec.raw_text},
            {"retrieval_echo", rec.retrieval_echo}};
  if (rec.stage == BatchRecord::Stage::Error) {
    j["error"] = {{"code", rec.error_code}, {"message", rec.error_message}};
  }
  if (rec.stage == BatchRecord::Stage::Complete) {
    json cases = json::array();
    for (const auto& outcome : rec.cases) {
      cases.push_back(
          {{"case_id", outcome.case_id},
           {"predicted", outcome.predicted
                             ? json(std::string(assess::level_name(*outcome.predicted)))
                             : json(nullptr)},
           {"issues", outcome.issues},
           {"rubric_inconsistent", outcome.rubric_inconsistent}});
    }
    j["cases"] = cases;
  }
  return j;
}

BatchRecord record_from(const json& j) {
  BatchRecord rec;
  rec.batch_id = j.at("batch_id").get<int>();
  rec.stage = stage_from(j.value("stage", "response"));
  rec.case_ids = j.value("case_ids", std::vector<std::string>{});
  rec.request_id = j.value("request_id", "");
  rec.prompt_digest = j.value("prompt_digest", "");
  rec.request_at = j.value("request_at", "");
  rec.response_at = j.value("response_at", "");
  rec.latency_ms = j.value("latency_ms", 0);
  rec.attempts = j.value("attempts", 0);
  rec.backend = j.value("backend", "");
  rec.finish_state = j.value("finish_state", "");
  rec.raw_text = j.value("raw_text", "");
  rec.retrieval_echo = j.value("retrieval_echo", false);
  if (j.contains("error")) {
    rec.error_code = j["error"].value("code", "");
    rec.error_message = j["error"].value("message", "");
  }
  if (j.contains("cases")) {
    for (const auto& c : j["cases"]) {
      BatchRecord::CaseOutcome outcome;
      outcome.case_id = c.at("case_id").get<std::string>();
      if (!c.at("predicted").is_null())
        outcome.predicted = assess::parse_level(c.at("predicted").get<std::string>());
      outcome.issues = c.value("issues", std::vector<std::string>{});
      outcome.rubric_inconsistent = c.value("rubric_inconsistent", false);
      rec.cases.push_back(std::move(outcome));
    }
  }
  return rec;
}

/// Everything a resumed or re-scored run needs, frozen at first launch.
struct RunContext {
  std::string run_id;
  assess::TaskDefinition task;
  RunMode mode = RunMode::Test;
  prompt::PromptVariant variant = prompt::PromptVariant::Full;
  bool exclude_unscored = false;
  std::vector<data::CaseRecord> pool;  // selected split, batch order
};

json context_json(const RunContext& ctx, const RunConfig& config) {
  json pool = json::array();
  for (const auto& rec : ctx.pool) {
    pool.push_back({{"case_id", rec.case_id},
                    {"image_path", rec.image_path.string()},
                    {"human_label", std::string(assess::level_name(rec.human_label))},
                    {"task_id", rec.task_id}});
  }
  json j = {{"run_id", ctx.run_id},
            {"task", jsonx::task_json(ctx.task)},
            {"task_base_dir", ctx.task.base_dir.string()},
            {"mode", std::string(mode_name(ctx.mode))},
            {"variant", std::string(prompt::variant_name(ctx.variant))},
            {"backend", std::string(backend_name(config.backend))},
            {"manifest", config.manifest_path.string()},
            {"split",
             {{"n_examples", config.split.n_examples},
              {"n_validation", config.split.n_validation},
              {"n_test", config.split.n_test},
              {"seed", config.split.seed}}},
            {"decoding",
             {{"temperature", config.decoding.temperature},
              {"top_p", config.decoding.top_p},
              {"max_output_tokens", config.decoding.max_output_tokens}}},
            {"requests_per_minute", config.gateway.requests_per_minute},
            {"concurrency", config.concurrency},
            {"exclude_unscored", ctx.exclude_unscored},
            {"rng", std::string(kRngVersion)},
            {"cue_digest",
             (config.cues != nullptr ? *config.cues : parser::CueTable::builtin()).digest()},
            {"pool", pool}};
  return j;
}

RunContext context_from(const json& j) {
  RunContext ctx;
  ctx.run_id = j.at("run_id").get<std::string>();
  ctx.task = jsonx::task_from(j.at("task"), j.value("task_base_dir", std::string()));
  const auto mode = parse_mode(j.at("mode").get<std::string>());
  const auto variant = prompt::parse_variant(j.at("variant").get<std::string>());
  if (!mode || !variant) raise(Errc::InvalidConfig, "config.json has a bad mode or variant");
  ctx.mode = *mode;
  ctx.variant = *variant;
  ctx.exclude_unscored = j.value("exclude_unscored", false);
  for (const auto& c : j.at("pool")) {
    const auto label = assess::parse_level(c.at("human_label").get<std::string>());
    if (!label) raise(Errc::InvalidConfig, "config.json pool has an unparsable label");
    ctx.pool.push_back({c.at("case_id").get<std::string>(),
                        std::filesystem::path(c.at("image_path").get<std::string>()), *label,
                        c.value("task_id", std::string())});
  }
  return ctx;
}

ProficiencyLevel maximal_distance_label(ProficiencyLevel truth) {
  // Unscored cases count as the worst ordinal miss; Developing maps to
  // Proficient for determinism (both neighbors are one step away).
  return truth == ProficiencyLevel::Proficient ? ProficiencyLevel::Beginning
                                               : ProficiencyLevel::Proficient;
}

std::filesystem::path records_path(const std::filesystem::path& run_dir) {
  return run_dir / "batches.jsonl";
}

RunSummary summarize(const RunContext& ctx, const std::map<int, BatchRecord>& records,
                     std::optional<bool> exclude_override) {
  RunSummary summary;
  summary.run_id = ctx.run_id;
  summary.task_id = ctx.task.task_id;
  summary.mode = ctx.mode;
  summary.variant = ctx.variant;
  summary.exclude_unscored = exclude_override.value_or(ctx.exclude_unscored);

  for (std::size_t i = 0; i < ctx.pool.size(); ++i) {
    const auto& rec = ctx.pool[i];
    const int batch_id = static_cast<int>(i / data::kMaxBatchSize);
    CaseRow row;
    row.case_id = rec.case_id;
    row.human = rec.human_label;
    ++summary.class_n[assess::ordinal(rec.human_label)];

    auto it = records.find(batch_id);
    if (it == records.end()) {
      row.issues.push_back("no_record");
    } else if (it->second.stage == BatchRecord::Stage::Error) {
      row.issues.push_back("backend_error:" + it->second.error_code);
    } else if (it->second.stage != BatchRecord::Stage::Complete) {
      row.issues.push_back("unparsed_record");
    } else {
      const auto& outcomes = it->second.cases;
      const auto found = std::find_if(outcomes.begin(), outcomes.end(),
                                      [&](const auto& o) { return o.case_id == rec.case_id; });
      if (found == outcomes.end()) {
        row.issues.push_back("case_missing_from_record");
      } else {
        row.predicted = found->predicted;
        row.issues = found->issues;
        row.rubric_inconsistent = found->rubric_inconsistent;
      }
    }
    if (!row.predicted) ++summary.unscored;
    summary.per_case.push_back(std::move(row));
  }

  std::vector<std::pair<ProficiencyLevel, ProficiencyLevel>> pairs;
  for (const auto& row : summary.per_case) {
    if (row.predicted) {
      pairs.emplace_back(row.human, *row.predicted);
    } else if (!summary.exclude_unscored) {
      pairs.emplace_back(row.human, maximal_distance_label(row.human));
    }
  }
  if (pairs.empty())
    raise(Errc::EmptyInput, "run " + ctx.run_id + " produced no scorable cases");
  summary.confusion = metrics::confusion(pairs);
  summary.report = metrics::report(summary.confusion);
  return summary;
}

json summary_json(const RunSummary& summary) {
  json per_case = json::array();
  for (const auto& row : summary.per_case) {
    per_case.push_back(
        {{"case_id", row.case_id},
         {"human", std::string(assess::level_name(row.human))},
         {"predicted",
          row.predicted ? json(std::string(assess::level_name(*row.predicted))) : json(nullptr)},
         {"issues", row.issues},
         {"rubric_inconsistent", row.rubric_inconsistent}});
  }
  return {{"run_id", summary.run_id},
          {"task_id", summary.task_id},
          {"mode", std::string(mode_name(summary.mode))},
          {"variant", std::string(prompt::variant_name(summary.variant))},
          {"exclude_unscored", summary.exclude_unscored},
          {"unscored", summary.unscored},
          {"class_n", {summary.class_n[0], summary.class_n[1], summary.class_n[2]}},
          {"per_case", per_case},
          {"metrics", jsonx::report_json(summary.report)},
          {"confusion", jsonx::confusion_json(summary.confusion)}};
}

RunSummary summary_from(const json& j) {
  RunSummary summary;
  summary.run_id = j.at("run_id").get<std::string>();
  summary.task_id = j.at("task_id").get<std::string>();
  summary.mode = parse_mode(j.at("mode").get<std::string>()).value_or(RunMode::Test);
  summary.variant =
      prompt::parse_variant(j.at("variant").get<std::string>()).value_or(prompt::PromptVariant::Full);
  summary.exclude_unscored = j.value("exclude_unscored", false);
  summary.unscored = j.value("unscored", 0);
  for (int i = 0; i < 3; ++i) summary.class_n[i] = j.at("class_n")[i].get<std::int64_t>();
  for (const auto& c : j.at("per_case")) {
    CaseRow row;
    row.case_id = c.at("case_id").get<std::string>();
    row.human = assess::parse_level(c.at("human").get<std::string>())
                    .value_or(ProficiencyLevel::Beginning);
    if (!c.at("predicted").is_null())
      row.predicted = assess::parse_level(c.at("predicted").get<std::string>());
    row.issues = c.value("issues", std::vector<std::string>{});
    row.rubric_inconsistent = c.value("rubric_inconsistent", false);
    summary.per_case.push_back(std::move(row));
  }
  summary.report = jsonx::report_from(j.at("metrics"));
  summary.confusion = jsonx::confusion_from(j.at("confusion"));
  return summary;
}

std::string render_run_report(const RunSummary& summary) {
  std::string out = "Run " + summary.run_id + " (" + std::string(mode_name(summary.mode)) +
                    ", variant " + std::string(prompt::variant_name(summary.variant)) + ")\n\n";
  if (summary.mode == RunMode::Validation) {
    out += metrics::render_validation_table(
        {{summary.task_id, summary.report, summary.class_n}});
  } else {
    out += metrics::render_test_table({{summary.task_id, summary.report}}, nullptr);
  }
  out += "\n" + metrics::render_confusion(summary.task_id, summary.confusion);
  out += "\nunscored cases: " + std::to_string(summary.unscored) +
         (summary.exclude_unscored ? " (excluded from metrics)\n"
                                   : " (scored as maximal-distance errors)\n");
  return out;
}

void write_summary_files(const std::filesystem::path& run_dir, const RunSummary& summary) {
  jsonx::write_json_file(run_dir / "summary.json", summary_json(summary));
  std::ofstream report(run_dir / "report.txt", std::ios::binary | std::ios::trunc);
  if (!report) raise(Errc::PersistenceError, "cannot write report.txt under " + run_dir.string());
  report << render_run_report(summary);
}

RunContext load_context(const std::filesystem::path& run_dir) {
  const auto config_path = run_dir / "config.json";
  if (!std::filesystem::exists(config_path))
    raise(Errc::IncompleteRun, "missing config.json under " + run_dir.string());
  return context_from(jsonx::load_json_file(config_path));
}

}  // namespace

std::map<int, BatchRecord> load_batch_records(const std::filesystem::path& run_dir) {
  std::map<int, BatchRecord> records;
  std::ifstream in(records_path(run_dir));
  if (!in) return records;
  std::string line;
  while (std::getline(in, line)) {
    if (textx::trim(line).empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;  // interrupted write; later records supersede
    try {
      BatchRecord rec = record_from(j);
      records[rec.batch_id] = std::move(rec);  // last record per batch wins
    } catch (const json::exception&) {
      continue;
    }
  }
  return records;
}

RunSummary run(const RunConfig& config) {
  if (config.run_dir.empty()) raise(Errc::InvalidConfig, "run needs a run directory");
  std::filesystem::create_directories(config.run_dir / "sheets");
  const auto config_path = config.run_dir / "config.json";

  RunContext ctx;
  if (std::filesystem::exists(config_path)) {
    if (!config.resume)
      raise(Errc::PersistenceError,
            "run directory already initialized (pass resume): " + config.run_dir.string());
    ctx = context_from(jsonx::load_json_file(config_path));
    if (ctx.task.task_id != config.task.task_id || ctx.mode != config.mode ||
        ctx.variant != config.variant)
      raise(Errc::InvalidConfig, "resume config does not match the run directory snapshot");
  } else {
    ctx.task = config.task;
    ctx.mode = config.mode;
    ctx.variant = config.variant;
    ctx.exclude_unscored = config.exclude_unscored;
    const auto manifest = data::load_manifest(config.manifest_path);
    const auto splits = data::sample_splits(manifest, config.split);
    const auto& selected = ctx.mode == RunMode::Validation ? splits.validation : splits.test;
    for (const auto& rec : selected) {
      if (rec.task_id == ctx.task.task_id) ctx.pool.push_back(rec);
    }
    if (ctx.pool.empty())
      raise(Errc::InvalidConfig,
            "split holds no cases for task " + ctx.task.task_id + " in mode " +
                std::string(mode_name(ctx.mode)));
    ctx.run_id = ctx.task.task_id + "-" + std::string(mode_name(ctx.mode)) + "-" +
                 std::string(prompt::variant_name(ctx.variant)) + "-s" +
                 std::to_string(config.split.seed);
    jsonx::write_json_file(config_path, context_json(ctx, config));
  }

  const auto batches = data::make_batches(ctx.pool);
  const auto existing = load_batch_records(config.run_dir);

  // Backend wiring.
  std::shared_ptr<vlm::Backend> backend;
  switch (config.backend) {
    case BackendKind::Remote:
      backend = std::make_shared<vlm::RemoteBackend>(config.remote);
      break;
    case BackendKind::Scripted:
      backend = std::make_shared<vlm::ScriptedBackend>(config.fixture_dir);
      break;
    case BackendKind::Oracle: {
      vlm::OracleScript script = config.oracle_script.value_or(vlm::OracleScript{});
      if (!config.oracle_script) script.seed = config.split.seed;
      if (script.hidden_labels.empty()) {
        for (const auto& rec : ctx.pool) script.hidden_labels[rec.case_id] = rec.human_label;
      }
      backend = std::make_shared<vlm::OracleBackend>(std::move(script), ctx.task.rubric);
      break;
    }
  }
  vlm::GatewayOptions gateway_options = config.gateway;
  gateway_options.max_in_flight = std::max(1, config.concurrency);
  vlm::Gateway gateway(backend, gateway_options);

  // Reference sheet once per run; every batch reuses its encoding.
  const auto reference =
      sheet::compose_reference_sheet(ctx.task, config.layout,
                                     ctx.variant != prompt::PromptVariant::NoExamples);
  const auto reference_png = encode_png(reference.image);
  sheet::save_sheet(reference, config.run_dir / "sheets" / "reference.png");

  std::map<int, prompt::CompiledPrompt> prompt_cache;
  std::mutex prompt_mutex;
  auto prompt_for = [&](int drawings) -> prompt::CompiledPrompt {
    std::lock_guard lock(prompt_mutex);
    auto it = prompt_cache.find(drawings);
    if (it != prompt_cache.end()) return it->second;
    prompt::CompileOptions options;
    options.expected_drawings = drawings;
    options.temperature = config.decoding.temperature;
    options.top_p = config.decoding.top_p;
    options.templates = config.templates;
    auto compiled = prompt::compile(ctx.task, ctx.variant, options);
    prompt_cache[drawings] = compiled;
    return compiled;
  };

  std::ofstream records_out(records_path(config.run_dir), std::ios::binary | std::ios::app);
  if (!records_out)
    raise(Errc::PersistenceError, "cannot append to " + records_path(config.run_dir).string());
  std::mutex write_mutex;
  auto append = [&](const BatchRecord& rec) {
    std::lock_guard lock(write_mutex);
    records_out << record_json(rec).dump() << '\n';
    records_out.flush();
    if (!records_out)
      raise(Errc::PersistenceError, "write failed: " + records_path(config.run_dir).string());
  };

  const parser::CueTable& cues = config.cues != nullptr ? *config.cues
                                                        : parser::CueTable::builtin();

  auto process = [&](const data::Batch& batch) {
    const auto composed = sheet::compose_test_sheet(batch, config.layout);
    const auto sheet_path = config.run_dir / "sheets" / ("test_b" + zero4(batch.batch_id) + ".png");
    sheet::save_sheet(composed, sheet_path);

    const auto compiled = prompt_for(static_cast<int>(batch.cases.size()));

    vlm::SessionRequest request;
    request.prompt_text = compiled.text;
    request.attachments[0] = {prompt::AttachmentRole::ReferenceSheet, reference_png};
    request.attachments[1] = {prompt::AttachmentRole::TestSheet, encode_png(composed.image)};
    request.decoding = config.decoding;
    request.request_id = ctx.run_id + "-b" + zero4(batch.batch_id);
    for (const auto& rec : batch.cases) request.case_ids.push_back(rec.case_id);

    BatchRecord rec;
    rec.batch_id = batch.batch_id;
    rec.case_ids = request.case_ids;
    rec.request_id = request.request_id;
    rec.prompt_digest = compiled.digest;
    rec.request_at = iso_now();

    vlm::SessionResponse response;
    try {
      response = gateway.submit(request);
    } catch (const Error& e) {
      if (e.code() == Errc::PersistenceError) throw;
      rec.stage = BatchRecord::Stage::Error;
      rec.error_code = errc_name(e.code());
      rec.error_message = e.what();
      append(rec);
      return;
    }
    rec.stage = BatchRecord::Stage::Response;
    rec.response_at = iso_now();
    rec.latency_ms = response.latency_ms;
    rec.attempts = response.attempts;
    rec.backend = response.backend;
    rec.finish_state = std::string(vlm::finish_name(response.finish_state));
    rec.raw_text = response.text;
    append(rec);  // raw evidence lands before parsing starts

    const auto parsed =
        parser::parse(response.text, static_cast<int>(batch.cases.size()), ctx.task.rubric, cues);
    rec.stage = BatchRecord::Stage::Complete;
    rec.retrieval_echo = parsed.retrieval_echo_found;
    for (std::size_t position = 0; position < batch.cases.size(); ++position) {
      BatchRecord::CaseOutcome outcome;
      outcome.case_id = batch.cases[position].case_id;
      const int drawing_index = static_cast<int>(position) + 1;
      const auto assessment =
          std::find_if(parsed.assessments.begin(), parsed.assessments.end(),
                       [&](const auto& a) { return a.index == drawing_index; });
      if (assessment != parsed.assessments.end()) outcome.predicted = assessment->final_level;
      for (const auto& issue : parsed.issues) {
        if (issue.drawing_index && *issue.drawing_index == drawing_index) {
          outcome.issues.push_back(std::string(parser::issue_name(issue.kind)));
          if (issue.kind == parser::IssueKind::RubricInconsistency)
            outcome.rubric_inconsistent = true;
        }
      }
      rec.cases.push_back(std::move(outcome));
    }
    append(rec);
  };

  // Work queue; K workers keep at most K batches in flight.
  std::atomic<std::size_t> next{0};
  std::mutex failure_mutex;
  std::exception_ptr failure;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= batches.size()) return;
      {
        std::lock_guard lock(failure_mutex);
        if (failure) return;
      }
      const auto& batch = batches[i];
      auto it = existing.find(batch.batch_id);
      if (it != existing.end() && it->second.stage == BatchRecord::Stage::Complete)
        continue;  // resume: evidence already complete
      try {
        process(batch);
      } catch (const Error& e) {
        if (e.code() != Errc::PersistenceError) {
          BatchRecord rec;
          rec.batch_id = batch.batch_id;
          for (const auto& c : batch.cases) rec.case_ids.push_back(c.case_id);
          rec.stage = BatchRecord::Stage::Error;
          rec.error_code = errc_name(e.code());
          rec.error_message = e.what();
          try {
            append(rec);
            continue;
          } catch (...) {
          }
        }
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  const int workers_n = std::max(1, config.concurrency);
  std::vector<std::thread> workers;
  workers.reserve(static_cast<std::size_t>(workers_n));
  for (int i = 0; i < workers_n; ++i) workers.emplace_back(worker);
  for (auto& w : workers) w.join();
  if (failure) std::rethrow_exception(failure);

  const auto records = load_batch_records(config.run_dir);
  RunSummary summary = summarize(ctx, records, std::nullopt);
  write_summary_files(config.run_dir, summary);
  return summary;
}

std::map<prompt::PromptVariant, RunSummary> ablate(const RunConfig& config) {
  std::map<prompt::PromptVariant, RunSummary> summaries;
  for (const auto variant : {prompt::PromptVariant::Full, prompt::PromptVariant::NoNotes,
                             prompt::PromptVariant::NoExamples}) {
    RunConfig cfg = config;
    cfg.variant = variant;
    cfg.run_dir = config.run_dir / std::string(prompt::variant_name(variant));
    summaries[variant] = run(cfg);
  }
  jsonx::write_json_file(config.run_dir / "ablation.json", [&] {
    json changes = json::array();
    for (const auto& change : variant_changes(summaries)) {
      changes.push_back(
          {{"case_id", change.case_id},
           {"variant", std::string(prompt::variant_name(change.variant))},
           {"full", change.from ? json(std::string(assess::level_name(*change.from)))
                                : json(nullptr)},
           {"variant_label",
            change.to ? json(std::string(assess::level_name(*change.to))) : json(nullptr)}});
    }
    return json{{"changes", changes}};
  }());
  std::ofstream table(config.run_dir / "ablation.txt", std::ios::binary | std::ios::trunc);
  if (!table) raise(Errc::PersistenceError, "cannot write ablation.txt");
  table << render_ablation(summaries);
  return summaries;
}

std::vector<LabelChange> variant_changes(
    const std::map<prompt::PromptVariant, RunSummary>& summaries) {
  std::vector<LabelChange> changes;
  const auto full = summaries.find(prompt::PromptVariant::Full);
  if (full == summaries.end()) return changes;
  for (const auto& [variant, summary] : summaries) {
    if (variant == prompt::PromptVariant::Full) continue;
    for (std::size_t i = 0;
         i < std::min(summary.per_case.size(), full->second.per_case.size()); ++i) {
      const auto& base = full->second.per_case[i];
      const auto& other = summary.per_case[i];
      if (base.predicted != other.predicted)
        changes.push_back({base.case_id, variant, base.predicted, other.predicted});
    }
  }
  return changes;
}

std::string render_ablation(const std::map<prompt::PromptVariant, RunSummary>& summaries) {
  std::string out = "Per-case labels by prompt variant\n";
  const auto full = summaries.find(prompt::PromptVariant::Full);
  if (full == summaries.end()) return out;
  auto label_of = [](const std::optional<ProficiencyLevel>& l) {
    return l ? std::string(assess::level_name(*l)) : std::string("-");
  };
  out += "\ncase_id";
  for (const auto& [variant, summary] : summaries)
    out += "  " + std::string(prompt::variant_name(variant));
  out += "\n";
  for (std::size_t i = 0; i < full->second.per_case.size(); ++i) {
    out += full->second.per_case[i].case_id;
    for (const auto& [variant, summary] : summaries) {
      out += "  " + (i < summary.per_case.size() ? label_of(summary.per_case[i].predicted)
                                                 : std::string("-"));
    }
    out += "\n";
  }
  out += "\nchanges vs full:\n";
  const auto changes = variant_changes(summaries);
  if (changes.empty()) out += "(none)\n";
  for (const auto& change : changes) {
    out += change.case_id + ": " + std::string(prompt::variant_name(change.variant)) + " " +
           label_of(change.from) + " -> " + label_of(change.to) + "\n";
  }
  return out;
}

RunSummary score_run_dir(const std::filesystem::path& run_dir,
                         std::optional<bool> exclude_unscored) {
  const RunContext ctx = load_context(run_dir);
  const auto records = load_batch_records(run_dir);
  RunSummary summary = summarize(ctx, records, exclude_unscored);
  write_summary_files(run_dir, summary);
  return summary;
}

RunSummary reparse_run_dir(const std::filesystem::path& run_dir, const parser::CueTable* cues) {
  const RunContext ctx = load_context(run_dir);
  auto records = load_batch_records(run_dir);
  const parser::CueTable& table = cues != nullptr ? *cues : parser::CueTable::builtin();

  std::ofstream out(records_path(run_dir), std::ios::binary | std::ios::app);
  if (!out) raise(Errc::PersistenceError, "cannot append to " + records_path(run_dir).string());

  for (auto& [batch_id, rec] : records) {
    if (rec.stage == BatchRecord::Stage::Error) continue;
    if (rec.raw_text.empty()) continue;
    const auto parsed =
        parser::parse(rec.raw_text, static_cast<int>(rec.case_ids.size()), ctx.task.rubric, table);
    BatchRecord fresh = rec;
    fresh.stage = BatchRecord::Stage::Complete;
    fresh.retrieval_echo = parsed.retrieval_echo_found;
    fresh.cases.clear();
    for (std::size_t position = 0; position < rec.case_ids.size(); ++position) {
      BatchRecord::CaseOutcome outcome;
      outcome.case_id = rec.case_ids[position];
      const int drawing_index = static_cast<int>(position) + 1;
      const auto assessment =
          std::find_if(parsed.assessments.begin(), parsed.assessments.end(),
                       [&](const auto& a) { return a.index == drawing_index; });
      if (assessment != parsed.assessments.end()) outcome.predicted = assessment->final_level;
      for (const auto& issue : parsed.issues) {
        if (issue.drawing_index && *issue.drawing_index == drawing_index) {
          outcome.issues.push_back(std::string(parser::issue_name(issue.kind)));
          if (issue.kind == parser::IssueKind::RubricInconsistency)
            outcome.rubric_inconsistent = true;
        }
      }
      fresh.cases.push_back(std::move(outcome));
    }
    out << record_json(fresh).dump() << '\n';
    if (!out) raise(Errc::PersistenceError, "write failed during reparse");
  }
  out.flush();
  return score_run_dir(run_dir);
}

RunSummary load_summary(const std::filesystem::path& run_dir) {
  const auto path = run_dir / "summary.json";
  if (!std::filesystem::exists(path))
    raise(Errc::IncompleteRun, "missing summary.json under " + run_dir.string());
  return summary_from(jsonx::load_json_file(path));
}

std::string render_report(const std::vector<std::filesystem::path>& run_dirs) {
  if (run_dirs.empty()) raise(Errc::IncompleteRun, "no run directories given");
  std::vector<RunSummary> validation_runs, test_runs;
  for (const auto& dir : run_dirs) {
    RunSummary summary = load_summary(dir);
    (summary.mode == RunMode::Validation ? validation_runs : test_runs)
        .push_back(std::move(summary));
  }

  std::string out;
  if (!validation_runs.empty()) {
    std::vector<metrics::ValidationRow> rows;
    for (const auto& s : validation_runs) rows.push_back({s.task_id, s.report, s.class_n});
    out += "Validation scoring accuracy\n";
    out += metrics::render_validation_table(rows);
    out += "\n";
  }
  if (!test_runs.empty()) {
    std::vector<std::pair<std::string, metrics::MetricsReport>> rows;
    std::map<std::string, metrics::MetricsReport> by_item;
    for (const auto& s : test_runs) {
      rows.emplace_back(s.task_id, s.report);
      by_item[s.task_id + "/" + s.run_id] = s.report;
    }
    out += "Test scoring accuracy\n";
    if (rows.size() >= 2) {
      const auto agg = metrics::aggregate(by_item);
      out += metrics::render_test_table(rows, &agg.mean);
    } else {
      out += metrics::render_test_table(rows, nullptr);
    }
    out += "\n";
    for (const auto& s : test_runs) {
      out += metrics::render_confusion(s.task_id, s.confusion);
      out += "\n";
    }
  }
  return out;
}

}  // namespace nerif::orch
