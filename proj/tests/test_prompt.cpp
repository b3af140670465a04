#include <doctest.h>

#include <set>
#include <sstream>

#include "nerif/error.hpp"
#include "nerif/prompt.hpp"
#include "nerif/rng.hpp"
#include "testutil.hpp"

using namespace nerif;
using prompt::PromptVariant;
using testutil::TempDir;

namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

// Independent multiset subtraction: lines of b removed from lines of a.
std::vector<std::string> multiset_minus(const std::vector<std::string>& a,
                                        const std::vector<std::string>& b) {
  std::multiset<std::string> rest(a.begin(), a.end());
  for (const auto& line : b) {
    auto it = rest.find(line);
    if (it != rest.end()) rest.erase(it);
  }
  return {rest.begin(), rest.end()};
}

}  // namespace

TEST_CASE("full prompt: role sentence, section order, rubric content") {
  TempDir dir("prompt");
  const auto task = testutil::make_task(dir.path(), "M3-1");
  const auto compiled = prompt::compile(task, PromptVariant::Full);

  CHECK(compiled.text.rfind("You will be a science teacher who categorizes student responses "
                            "to science items for proficiency.",
                            0) == 0);

  std::size_t cursor = 0;
  for (const auto marker : prompt::kSectionMarkers) {
    const auto pos = compiled.text.find(marker, cursor);
    REQUIRE_MESSAGE(pos != std::string::npos, std::string(marker));
    cursor = pos;
  }

  CHECK(compiled.attachment_plan[0] == prompt::AttachmentRole::ReferenceSheet);
  CHECK(compiled.attachment_plan[1] == prompt::AttachmentRole::TestSheet);

  SUBCASE("each component letter appears once in the rubric section outside notes") {
    const auto rubric_begin = compiled.text.find("## RUBRIC");
    const auto rubric_end = compiled.text.find("## EXAMPLES");
    REQUIRE(rubric_begin < rubric_end);
    std::istringstream section(compiled.text.substr(rubric_begin, rubric_end - rubric_begin));
    std::string line;
    std::map<char, int> counts;
    while (std::getline(section, line)) {
      if (line.rfind("Note for (", 0) == 0) continue;
      for (char letter = 'A'; letter <= 'D'; ++letter) {
        const std::string marker = std::string("(") + letter + ")";
        std::size_t pos = 0;
        while ((pos = line.find(marker, pos)) != std::string::npos) {
          ++counts[letter];
          pos += marker.size();
        }
      }
    }
    for (char letter = 'A'; letter <= 'D'; ++letter) CHECK(counts[letter] == 1);
  }
  SUBCASE("rule thresholds and decoding parameters are recorded") {
    CHECK(compiled.text.find("at least 4 of the 4 components") != std::string::npos);
    CHECK(compiled.text.find("at least 2 but fewer than 4") != std::string::npos);
    CHECK(compiled.text.find("temperature = 0") != std::string::npos);
    CHECK(compiled.text.find("top_p = 0.01") != std::string::npos);
  }
  SUBCASE("drawing count flows into the test-sheet pointer") {
    prompt::CompileOptions options;
    options.expected_drawings = 2;
    const auto two = prompt::compile(task, PromptVariant::Full, options);
    CHECK(two.text.find("contains 2 student drawing(s)") != std::string::npos);
    CHECK(two.text.find("Drawing 1 through Drawing 2") != std::string::npos);
  }
}

TEST_CASE("compilation is deterministic") {
  TempDir dir("prompt_det");
  const auto task = testutil::make_task(dir.path(), "M3-1");
  const auto a = prompt::compile(task, PromptVariant::Full);
  const auto b = prompt::compile(task, PromptVariant::Full);
  CHECK(a.text == b.text);
  CHECK(a.digest == b.digest);
  CHECK(prompt::compile(task, PromptVariant::NoNotes).digest != a.digest);
}

TEST_CASE("no_notes deletes exactly the note lines") {
  TempDir dir("prompt_nonotes");
  const auto task = testutil::make_task(dir.path(), "M3-1");
  const auto full = prompt::compile(task, PromptVariant::Full);
  const auto no_notes = prompt::compile(task, PromptVariant::NoNotes);

  // Independent oracle: strip "Note for (" lines from Full.
  std::string stripped;
  for (const auto& line : lines_of(full.text)) {
    if (line.rfind("Note for (", 0) == 0) continue;
    stripped += line;
    stripped += '\n';
  }
  CHECK(stripped == no_notes.text);

  const auto diffs = prompt::diff_variants(full, no_notes);
  CHECK(diffs.size() == task.rubric.notes.size());
  for (const auto& d : diffs) {
    CHECK(d.op == prompt::LineDiff::Op::Delete);
    CHECK(d.line.rfind("Note for (", 0) == 0);
  }
}

TEST_CASE("no_examples deletes only retrieval and example-pointer lines") {
  TempDir dir("prompt_noex");
  const auto task = testutil::make_task(dir.path(), "M3-1");
  const auto full = prompt::compile(task, PromptVariant::Full);
  const auto no_examples = prompt::compile(task, PromptVariant::NoExamples);

  const auto diffs = prompt::diff_variants(full, no_examples);
  CHECK_FALSE(diffs.empty());
  for (const auto& d : diffs) {
    CHECK(d.op == prompt::LineDiff::Op::Delete);
    const bool blank = d.line.empty();
    const bool examplish = d.line.find("example") != std::string::npos ||
                           d.line.find("EXAMPLES") != std::string::npos;
    CHECK((blank || examplish));
  }
}

TEST_CASE("variant line multisets are subsets of Full") {
  Rng rng(2026);
  for (int trial = 0; trial < 10; ++trial) {
    TempDir dir("prompt_prop");
    auto task = testutil::make_task(dir.path(), "T" + std::to_string(trial));
    // vary the rubric arity across trials
    const int n = 2 + static_cast<int>(rng.bounded(3));
    task.rubric.components.resize(n);
    task.rubric.rule = assess::ProficiencyRule::standard(n);
    for (auto it = task.rubric.notes.begin(); it != task.rubric.notes.end();) {
      it = task.rubric.has_component(it->first) && rng.bounded(2) == 0
               ? std::next(it)
               : task.rubric.notes.erase(it);
    }
    for (auto& example : task.examples) example.rationale = "mentions nothing lettered";

    const auto full = lines_of(prompt::compile(task, PromptVariant::Full).text);
    for (const auto variant : {PromptVariant::NoNotes, PromptVariant::NoExamples}) {
      const auto sub = lines_of(prompt::compile(task, variant).text);
      CHECK(multiset_minus(sub, full).empty());  // pure deletions
    }
  }
}

TEST_CASE("diff of identical prompts is empty") {
  TempDir dir("prompt_diff");
  const auto task = testutil::make_task(dir.path(), "M3-1");
  const auto a = prompt::compile(task, PromptVariant::Full);
  CHECK(prompt::diff_variants(a, a).empty());
}

TEST_CASE("empty context and empty rubric are refused") {
  TempDir dir("prompt_err");
  auto task = testutil::make_task(dir.path(), "M3-1");

  auto no_context = task;
  no_context.context_text = "   ";
  try {
    prompt::compile(no_context, PromptVariant::Full);
    FAIL("expected EmptyContext");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyContext);
  }

  auto no_rubric = task;
  no_rubric.rubric.components.clear();
  try {
    prompt::compile(no_rubric, PromptVariant::Full);
    FAIL("expected EmptyRubric");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyRubric);
  }
}

TEST_CASE("template files round-trip through a directory") {
  TempDir dir("prompt_tpl");
  const auto task = testutil::make_task(dir.path(), "M3-1");
  const auto tpl_dir = dir / "templates";
  prompt::TemplateSet::builtin().write_dir(tpl_dir);
  const auto loaded = prompt::TemplateSet::from_dir(tpl_dir);

  prompt::CompileOptions options;
  options.templates = &loaded;
  CHECK(prompt::compile(task, PromptVariant::Full, options).text ==
        prompt::compile(task, PromptVariant::Full).text);

  SUBCASE("missing template file is reported") {
    std::filesystem::remove(tpl_dir / "rubric.txt");
    CHECK_THROWS_AS(prompt::TemplateSet::from_dir(tpl_dir), Error);
  }
  SUBCASE("unknown placeholder is reported") {
    auto broken = loaded;
    broken.role = "{{nonsense}}\n";
    prompt::CompileOptions bad;
    bad.templates = &broken;
    try {
      prompt::compile(task, PromptVariant::Full, bad);
      FAIL("expected BadTemplate");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::BadTemplate);
    }
  }
}
