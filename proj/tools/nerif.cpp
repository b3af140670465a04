// nerif - rubric-based scoring harness for student-drawn models behind a
// vision-language model gateway. Subcommands cover the whole workflow:
// sample splits, compose sheets and prompts, run scored sessions, ablate
// prompt variants, re-parse transcripts, re-score, and render report tables.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "nerif/dataset.hpp"
#include "nerif/error.hpp"
#include "nerif/json_io.hpp"
#include "nerif/orchestrator.hpp"
#include "nerif/prompt.hpp"
#include "nerif/response_parser.hpp"
#include "nerif/sheet.hpp"

#include <json.hpp>

namespace {

using nlohmann::json;

struct SplitFlags {
  std::string manifest;
  std::uint64_t seed = 0;
  int n_examples = 3;
  int n_validation = 3;
  int n_test = 50;
};

void add_split_flags(CLI::App* cmd, SplitFlags& flags, bool manifest_required = true) {
  auto* m = cmd->add_option("--manifest", flags.manifest,
                            "case manifest (CSV with header case_id,task_id,image_path,"
                            "human_label, or a JSON array)");
  if (manifest_required) m->required();
  cmd->add_option("--seed", flags.seed, "split sampling seed");
  cmd->add_option("--examples-per-class", flags.n_examples, "example quota per class");
  cmd->add_option("--validation-per-class", flags.n_validation, "validation quota per class");
  cmd->add_option("--test-per-class", flags.n_test, "test quota per class");
}

nerif::data::SplitSpec to_spec(const SplitFlags& flags) {
  return {flags.n_examples, flags.n_validation, flags.n_test, flags.seed};
}

json split_entry(const nerif::data::CaseRecord& rec) {
  return {{"case_id", rec.case_id},
          {"task_id", rec.task_id},
          {"image_path", rec.image_path.string()},
          {"human_label", std::string(nerif::assess::level_name(rec.human_label))}};
}

struct RunFlags {
  std::string task_file;
  SplitFlags split;
  std::string variant = "full";
  std::string mode = "test";
  std::string backend = "oracle";
  std::string run_dir;
  int concurrency = 1;
  double rpm = -1.0;  // negative: pick a backend-appropriate default
  bool resume = false;
  bool exclude_unscored = false;
  std::string oracle_script;
  std::string fixtures;
  std::string endpoint;
  std::string model;
  std::string templates_dir;
  std::string cue_table;
  int panel_width = 320;
  int max_attempts = 4;
};

void add_run_flags(CLI::App* cmd, RunFlags& flags) {
  cmd->add_option("--task", flags.task_file, "task definition JSON")->required();
  add_split_flags(cmd, flags.split);
  cmd->add_option("--variant", flags.variant, "prompt variant: full, no_notes, no_examples");
  cmd->add_option("--mode", flags.mode, "validation or test");
  cmd->add_option("--backend", flags.backend, "remote, scripted, or oracle");
  cmd->add_option("--run-dir", flags.run_dir, "run directory (created if absent)")->required();
  cmd->add_option("--concurrency", flags.concurrency, "batches in flight");
  cmd->add_option("--rpm", flags.rpm, "requests-per-minute ceiling (0 disables)");
  cmd->add_flag("--resume", flags.resume, "skip batches with complete records");
  cmd->add_flag("--exclude-unscored", flags.exclude_unscored,
                "drop unscored cases from metrics instead of counting them as"
                " maximal-distance errors");
  cmd->add_option("--oracle-script", flags.oracle_script,
                  "oracle script JSON (labels default to the manifest)");
  cmd->add_option("--fixtures", flags.fixtures, "scripted-backend fixture directory");
  cmd->add_option("--endpoint", flags.endpoint, "remote chat-completions endpoint URL");
  cmd->add_option("--model", flags.model, "remote model name");
  cmd->add_option("--templates", flags.templates_dir, "prompt template directory");
  cmd->add_option("--cue-table", flags.cue_table, "parser cue table file");
  cmd->add_option("--panel-width", flags.panel_width, "sheet panel width in pixels");
  cmd->add_option("--max-attempts", flags.max_attempts, "transport attempts per session");
}

nerif::orch::RunConfig build_config(const RunFlags& flags, nerif::prompt::TemplateSet& templates,
                                    nerif::parser::CueTable& cues) {
  nerif::orch::RunConfig config;
  config.task = nerif::io::load_task_file(flags.task_file);
  config.manifest_path = flags.split.manifest;
  config.split = to_spec(flags.split);

  const auto variant = nerif::prompt::parse_variant(flags.variant);
  if (!variant) nerif::raise(nerif::Errc::InvalidConfig, "unknown variant: " + flags.variant);
  config.variant = *variant;
  const auto mode = nerif::orch::parse_mode(flags.mode);
  if (!mode) nerif::raise(nerif::Errc::InvalidConfig, "unknown mode: " + flags.mode);
  config.mode = *mode;
  const auto backend = nerif::orch::parse_backend(flags.backend);
  if (!backend) nerif::raise(nerif::Errc::InvalidConfig, "unknown backend: " + flags.backend);
  config.backend = *backend;

  config.run_dir = flags.run_dir;
  config.concurrency = flags.concurrency;
  config.resume = flags.resume;
  config.exclude_unscored = flags.exclude_unscored;
  config.layout.max_panel_width_px = flags.panel_width;
  config.gateway.max_attempts = flags.max_attempts;
  // The paper-era default of 20 rpm only makes sense against a live service.
  config.gateway.requests_per_minute =
      flags.rpm >= 0 ? flags.rpm : (config.backend == nerif::orch::BackendKind::Remote ? 20.0 : 0.0);

  if (config.backend == nerif::orch::BackendKind::Remote) {
    config.remote.endpoint_url = flags.endpoint;
    config.remote.model = flags.model;
  }
  if (config.backend == nerif::orch::BackendKind::Scripted) config.fixture_dir = flags.fixtures;
  if (!flags.oracle_script.empty())
    config.oracle_script = nerif::io::load_oracle_script(flags.oracle_script);

  if (!flags.templates_dir.empty()) {
    templates = nerif::prompt::TemplateSet::from_dir(flags.templates_dir);
    config.templates = &templates;
  }
  if (!flags.cue_table.empty()) {
    cues = nerif::parser::CueTable::from_file(flags.cue_table);
    config.cues = &cues;
  }
  return config;
}

void print_summary(const nerif::orch::RunSummary& summary) {
  std::printf("run %s: %zu cases, accuracy %.2f, kappa %s, unscored %d\n",
              summary.run_id.c_str(), summary.per_case.size(), summary.report.accuracy,
              summary.report.degenerate_agreement
                  ? "n/a"
                  : [&] {
                      static char buf[16];
                      std::snprintf(buf, sizeof(buf), "%.2f", summary.report.kappa_qw);
                      return buf;
                    }(),
              summary.unscored);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nerif - rubric-based scoring harness for drawn models"};
  app.require_subcommand(1);

  // --- sample ---------------------------------------------------------
  SplitFlags sample_flags;
  std::string sample_out = "splits.json";
  auto* sample = app.add_subcommand("sample", "build balanced splits from a manifest");
  add_split_flags(sample, sample_flags);
  sample->add_option("--out", sample_out, "output JSON path");

  // --- compose --------------------------------------------------------
  std::string compose_task, compose_variant = "full", compose_out = "composed",
              compose_templates, compose_dump_templates, compose_manifest;
  std::uint64_t compose_seed = 0;
  bool show_prompt = false;
  int compose_panel_width = 320;
  auto* compose = app.add_subcommand("compose", "emit sheets and a prompt preview");
  compose->add_option("--task", compose_task, "task definition JSON");
  compose->add_option("--variant", compose_variant, "prompt variant");
  compose->add_option("--out-dir", compose_out, "output directory");
  compose->add_flag("--show-prompt", show_prompt, "print the compiled prompt text");
  compose->add_option("--templates", compose_templates, "prompt template directory");
  compose->add_option("--dump-templates", compose_dump_templates,
                      "write the builtin templates to this directory and exit");
  compose->add_option("--manifest", compose_manifest,
                      "also compose the first test-split sheet from this manifest");
  compose->add_option("--seed", compose_seed, "split seed for --manifest");
  compose->add_option("--panel-width", compose_panel_width, "sheet panel width in pixels");

  // --- run / ablate ----------------------------------------------------
  RunFlags run_flags;
  auto* run_cmd = app.add_subcommand("run", "score the validation or test split");
  add_run_flags(run_cmd, run_flags);

  RunFlags ablate_flags;
  auto* ablate_cmd =
      app.add_subcommand("ablate", "run full, no_notes, and no_examples over one split");
  add_run_flags(ablate_cmd, ablate_flags);

  // --- parse / score / report ------------------------------------------
  std::string parse_dir, parse_cues;
  auto* parse_cmd = app.add_subcommand("parse", "re-parse persisted transcripts in a run dir");
  parse_cmd->add_option("--run-dir", parse_dir, "run directory")->required();
  parse_cmd->add_option("--cue-table", parse_cues, "parser cue table file");

  std::string score_dir;
  bool score_exclude = false, score_include = false;
  auto* score_cmd = app.add_subcommand("score", "recompute metrics from persisted records");
  score_cmd->add_option("--run-dir", score_dir, "run directory")->required();
  score_cmd->add_flag("--exclude-unscored", score_exclude, "drop unscored cases");
  score_cmd->add_flag("--include-unscored", score_include,
                      "count unscored cases as maximal-distance errors");

  std::vector<std::string> report_dirs;
  auto* report_cmd = app.add_subcommand("report", "render tables from completed runs");
  report_cmd->add_option("run_dirs", report_dirs, "run directories")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sample) {
      const auto records = nerif::data::load_manifest(sample_flags.manifest);
      const auto splits = nerif::data::sample_splits(records, to_spec(sample_flags));
      json out = {{"seed", sample_flags.seed},
                  {"examples", json::array()},
                  {"validation", json::array()},
                  {"test", json::array()}};
      for (const auto& rec : splits.examples) out["examples"].push_back(split_entry(rec));
      for (const auto& rec : splits.validation) out["validation"].push_back(split_entry(rec));
      for (const auto& rec : splits.test) out["test"].push_back(split_entry(rec));
      std::ofstream f(sample_out, std::ios::binary | std::ios::trunc);
      f << out.dump(2) << '\n';
      std::printf("splits: %zu examples, %zu validation, %zu test -> %s\n",
                  splits.examples.size(), splits.validation.size(), splits.test.size(),
                  sample_out.c_str());
    } else if (*compose) {
      if (!compose_dump_templates.empty()) {
        nerif::prompt::TemplateSet::builtin().write_dir(compose_dump_templates);
        std::printf("templates written to %s\n", compose_dump_templates.c_str());
        return 0;
      }
      if (compose_task.empty())
        nerif::raise(nerif::Errc::InvalidConfig, "compose needs --task (or --dump-templates)");
      const auto task = nerif::io::load_task_file(compose_task);
      const auto variant = nerif::prompt::parse_variant(compose_variant);
      if (!variant)
        nerif::raise(nerif::Errc::InvalidConfig, "unknown variant: " + compose_variant);

      nerif::prompt::TemplateSet templates;
      nerif::prompt::CompileOptions options;
      if (!compose_templates.empty()) {
        templates = nerif::prompt::TemplateSet::from_dir(compose_templates);
        options.templates = &templates;
      }
      const auto compiled = nerif::prompt::compile(task, *variant, options);
      if (show_prompt) std::fputs(compiled.text.c_str(), stdout);

      std::filesystem::create_directories(compose_out);
      nerif::sheet::PanelLayout layout;
      layout.max_panel_width_px = compose_panel_width;
      const auto reference = nerif::sheet::compose_reference_sheet(
          task, layout, *variant != nerif::prompt::PromptVariant::NoExamples);
      nerif::sheet::save_sheet(reference, std::filesystem::path(compose_out) / "reference.png");
      std::ofstream prompt_out(std::filesystem::path(compose_out) / "prompt.txt",
                               std::ios::binary | std::ios::trunc);
      prompt_out << compiled.text;
      std::printf("reference sheet and prompt (%s) written to %s\n", compiled.digest.c_str(),
                  compose_out.c_str());

      if (!compose_manifest.empty()) {
        const auto records = nerif::data::load_manifest(compose_manifest);
        nerif::data::SplitSpec spec;
        spec.seed = compose_seed;
        const auto splits = nerif::data::sample_splits(records, spec);
        std::vector<nerif::data::CaseRecord> pool;
        for (const auto& rec : splits.test)
          if (rec.task_id == task.task_id) pool.push_back(rec);
        const auto batches = nerif::data::make_batches(pool);
        if (!batches.empty()) {
          const auto test_sheet = nerif::sheet::compose_test_sheet(batches.front(), layout);
          nerif::sheet::save_sheet(test_sheet,
                                   std::filesystem::path(compose_out) / "test_b0000.png");
          std::printf("first test sheet written (%zu panels)\n",
                      test_sheet.panel_boxes.size());
        }
      }
    } else if (*run_cmd) {
      nerif::prompt::TemplateSet templates;
      nerif::parser::CueTable cues;
      const auto config = build_config(run_flags, templates, cues);
      print_summary(nerif::orch::run(config));
    } else if (*ablate_cmd) {
      nerif::prompt::TemplateSet templates;
      nerif::parser::CueTable cues;
      const auto config = build_config(ablate_flags, templates, cues);
      const auto summaries = nerif::orch::ablate(config);
      for (const auto& [variant, summary] : summaries) print_summary(summary);
      std::printf("%zu label changes vs full; see ablation.txt\n",
                  nerif::orch::variant_changes(summaries).size());
    } else if (*parse_cmd) {
      nerif::parser::CueTable cues;
      const nerif::parser::CueTable* cues_ptr = nullptr;
      if (!parse_cues.empty()) {
        cues = nerif::parser::CueTable::from_file(parse_cues);
        cues_ptr = &cues;
      }
      print_summary(nerif::orch::reparse_run_dir(parse_dir, cues_ptr));
    } else if (*score_cmd) {
      std::optional<bool> exclude;
      if (score_exclude) exclude = true;
      if (score_include) exclude = false;
      print_summary(nerif::orch::score_run_dir(score_dir, exclude));
    } else if (*report_cmd) {
      std::vector<std::filesystem::path> dirs(report_dirs.begin(), report_dirs.end());
      std::fputs(nerif::orch::render_report(dirs).c_str(), stdout);
    }
  } catch (const nerif::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
