#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nerif/assessment.hpp"
#include "nerif/dataset.hpp"
#include "nerif/gateway.hpp"
#include "nerif/metrics.hpp"
#include "nerif/prompt.hpp"
#include "nerif/response_parser.hpp"
#include "nerif/sheet.hpp"

namespace nerif::orch {

using assess::ProficiencyLevel;

enum class RunMode {
  Validation,  // scores the validation split
  Test,        // scores the test split
};

std::string_view mode_name(RunMode m);
std::optional<RunMode> parse_mode(std::string_view name);

enum class BackendKind {
  Remote,
  Scripted,
  Oracle,
};

std::string_view backend_name(BackendKind b);
std::optional<BackendKind> parse_backend(std::string_view name);

struct RunConfig {
  assess::TaskDefinition task;
  std::filesystem::path manifest_path;
  data::SplitSpec split;
  prompt::PromptVariant variant = prompt::PromptVariant::Full;
  RunMode mode = RunMode::Test;
  BackendKind backend = BackendKind::Oracle;
  vlm::DecodingParams decoding;
  vlm::GatewayOptions gateway;  // rpm, retry policy, clocks
  int concurrency = 1;          // batches in flight
  std::filesystem::path run_dir;
  bool resume = false;
  bool exclude_unscored = false;
  sheet::PanelLayout layout;

  vlm::RemoteOptions remote;            // backend == Remote
  std::filesystem::path fixture_dir;    // backend == Scripted
  std::optional<vlm::OracleScript> oracle_script;  // backend == Oracle; absent means
                                                   // identity labels from the manifest
  const prompt::TemplateSet* templates = nullptr;  // null means builtin
  const parser::CueTable* cues = nullptr;          // null means builtin
};

/// One line of batches.jsonl. Records are append-only; the raw response is
/// persisted (stage Response) before parsing starts, and a second record
/// (stage Complete) lands once labels are extracted. The last record per
/// batch_id wins on read.
struct BatchRecord {
  enum class Stage { Response, Complete, Error };

  int batch_id = 0;
  Stage stage = Stage::Response;
  std::vector<std::string> case_ids;
  std::string request_id;
  std::string prompt_digest;
  std::string request_at;   // wall-clock ISO-8601
  std::string response_at;
  int latency_ms = 0;
  int attempts = 0;
  std::string backend;
  std::string finish_state;
  std::string raw_text;
  std::string error_code;     // stage Error
  std::string error_message;  // stage Error
  bool retrieval_echo = false;

  struct CaseOutcome {
    std::string case_id;
    std::optional<ProficiencyLevel> predicted;
    std::vector<std::string> issues;
    bool rubric_inconsistent = false;
  };
  std::vector<CaseOutcome> cases;  // stage Complete
};

struct CaseRow {
  std::string case_id;
  ProficiencyLevel human = ProficiencyLevel::Beginning;
  std::optional<ProficiencyLevel> predicted;
  std::vector<std::string> issues;
  bool rubric_inconsistent = false;
};

struct RunSummary {
  std::string run_id;
  std::string task_id;
  RunMode mode = RunMode::Test;
  prompt::PromptVariant variant = prompt::PromptVariant::Full;
  std::vector<CaseRow> per_case;  // covers the selected split exactly once, split order
  metrics::MetricsReport report;
  metrics::ConfusionMatrix confusion;
  int unscored = 0;
  bool exclude_unscored = false;
  std::array<std::int64_t, 3> class_n{};  // split size per class
};

/// Drive a full run: compose sheets, compile the prompt, submit one fresh
/// session per batch, persist evidence, parse, and score. Backend failures
/// are recorded per batch and the run continues; only unwritable persistence
/// aborts. With resume set, batches whose Complete records already exist are
/// skipped and the frozen split from config.json is reused.
RunSummary run(const RunConfig& config);

/// Full, NoNotes, NoExamples over the identical split and batch order.
/// Writes ablation.txt / ablation.json beside the per-variant run dirs.
std::map<prompt::PromptVariant, RunSummary> ablate(const RunConfig& config);

struct LabelChange {
  std::string case_id;
  prompt::PromptVariant variant = prompt::PromptVariant::NoNotes;
  std::optional<ProficiencyLevel> from;  // Full's label
  std::optional<ProficiencyLevel> to;    // variant's label
};

/// Per-case label differences of each ablation variant against Full.
std::vector<LabelChange> variant_changes(
    const std::map<prompt::PromptVariant, RunSummary>& summaries);
std::string render_ablation(const std::map<prompt::PromptVariant, RunSummary>& summaries);

/// Rebuild a summary from the persisted records alone (no backend traffic)
/// and rewrite summary.json / report.txt.
RunSummary score_run_dir(const std::filesystem::path& run_dir,
                         std::optional<bool> exclude_unscored = std::nullopt);

/// Re-parse every persisted raw transcript, append fresh Complete records,
/// and re-score. Returns the rebuilt summary.
RunSummary reparse_run_dir(const std::filesystem::path& run_dir,
                           const parser::CueTable* cues = nullptr);

RunSummary load_summary(const std::filesystem::path& run_dir);

/// Validation table (Table-1 shape), test table (Table-2 shape), and
/// per-item confusion matrices for the given run directories. Throws
/// IncompleteRun naming whatever artifact is missing.
std::string render_report(const std::vector<std::filesystem::path>& run_dirs);

/// Records currently persisted for a run, last record per batch_id.
std::map<int, BatchRecord> load_batch_records(const std::filesystem::path& run_dir);

}  // namespace nerif::orch
