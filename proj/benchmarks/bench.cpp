#include <benchmark/benchmark.h>

#include "nerif/assessment.hpp"
#include "nerif/gateway.hpp"
#include "nerif/metrics.hpp"
#include "nerif/prompt.hpp"
#include "nerif/response_parser.hpp"
#include "nerif/rng.hpp"
#include "nerif/sheet.hpp"

using namespace nerif;

namespace {

assess::Rubric bench_rubric() {
  assess::Rubric rubric;
  rubric.components = {{'A', "state change"},
                       {'B', "arrangement change"},
                       {'C', "particle labels"},
                       {'D', "motion keys"}};
  rubric.rule = assess::ProficiencyRule::standard(4);
  return rubric;
}

std::string bench_transcript() {
  vlm::OracleScript script;
  script.seed = 7;
  script.hidden_labels = {{"a", assess::ProficiencyLevel::Beginning},
                          {"b", assess::ProficiencyLevel::Developing},
                          {"c", assess::ProficiencyLevel::Proficient}};
  return vlm::oracle_generate({"a", "b", "c"}, script, bench_rubric());
}

void BM_Classify(benchmark::State& state) {
  const auto rule = assess::ProficiencyRule::standard(4);
  assess::VerdictMap verdicts = {{'A', assess::ComponentVerdict::Present},
                                 {'B', assess::ComponentVerdict::Absent},
                                 {'C', assess::ComponentVerdict::Present},
                                 {'D', assess::ComponentVerdict::Uncertain}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(assess::classify(verdicts, rule));
  }
}
BENCHMARK(BM_Classify);

void BM_ParseTranscript(benchmark::State& state) {
  const auto rubric = bench_rubric();
  const auto text = bench_transcript();
  for (auto _ : state) {
    auto parsed = parser::parse(text, 3, rubric);
    benchmark::DoNotOptimize(parsed);
  }
}
BENCHMARK(BM_ParseTranscript);

void BM_OracleGenerate(benchmark::State& state) {
  vlm::OracleScript script;
  script.seed = 7;
  script.noise_matrix = {{{0.68, 0.32, 0.0}, {0.44, 0.56, 0.0}, {0.24, 0.64, 0.12}}};
  script.hidden_labels = {{"a", assess::ProficiencyLevel::Beginning},
                          {"b", assess::ProficiencyLevel::Developing},
                          {"c", assess::ProficiencyLevel::Proficient}};
  const auto rubric = bench_rubric();
  for (auto _ : state) {
    auto text = vlm::oracle_generate({"a", "b", "c"}, script, rubric);
    benchmark::DoNotOptimize(text);
  }
}
BENCHMARK(BM_OracleGenerate);

void BM_MetricsReport(benchmark::State& state) {
  metrics::ConfusionMatrix m;
  m.counts = {{{34, 16, 0}, {22, 28, 0}, {12, 32, 6}}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(metrics::report(m));
  }
}
BENCHMARK(BM_MetricsReport);

void BM_ComposeTestSheet(benchmark::State& state) {
  const auto tmp = std::filesystem::temp_directory_path() / "nerif_bench_panel.png";
  write_png(tmp, Raster::solid(48, 48, {80, 120, 200}));
  data::Batch batch;
  batch.batch_id = 0;
  for (int i = 0; i < 3; ++i)
    batch.cases.push_back({"c" + std::to_string(i), tmp,
                           assess::ProficiencyLevel::Developing, "M3-1"});
  sheet::PanelLayout layout;
  layout.max_panel_width_px = 64;
  for (auto _ : state) {
    auto composed = sheet::compose_test_sheet(batch, layout);
    benchmark::DoNotOptimize(composed);
  }
  std::filesystem::remove(tmp);
}
BENCHMARK(BM_ComposeTestSheet);

void BM_CompilePrompt(benchmark::State& state) {
  assess::TaskDefinition task;
  task.task_id = "M3-1";
  task.context_text = "Students heat solid butter until its state changes.";
  task.context_image = "context.png";
  task.rubric = bench_rubric();
  for (auto _ : state) {
    auto compiled = prompt::compile(task, prompt::PromptVariant::Full);
    benchmark::DoNotOptimize(compiled);
  }
}
BENCHMARK(BM_CompilePrompt);

}  // namespace

BENCHMARK_MAIN();
