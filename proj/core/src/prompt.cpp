#include "nerif/prompt.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "nerif/error.hpp"
#include "nerif/rng.hpp"
#include "text.hpp"

namespace nerif::prompt {

std::string_view variant_name(PromptVariant v) {
  switch (v) {
    case PromptVariant::Full: return "full";
    case PromptVariant::NoExamples: return "no_examples";
    case PromptVariant::NoNotes: return "no_notes";
  }
  return "full";
}

std::optional<PromptVariant> parse_variant(std::string_view name) {
  const std::string lowered = textx::to_lower(textx::trim(name));
  if (lowered == "full") return PromptVariant::Full;
  if (lowered == "no_examples" || lowered == "noexamples") return PromptVariant::NoExamples;
  if (lowered == "no_notes" || lowered == "nonotes") return PromptVariant::NoNotes;
  return std::nullopt;
}

namespace {

constexpr std::string_view kRoleTemplate =
    "You will be a science teacher who categorizes student responses to science items for "
    "proficiency.\n";

constexpr std::string_view kTaskTemplate =
    "## TASK\n"
    "Categorize the student-drawn models for item {{task_id}} into 'Beginning', 'Developing', "
    "or 'Proficient' according to the scoring rubric below.\n"
    "First, retrieve the problem context and the scoring rubric from the first attached "
    "image.\n"
    "{{retrieval_line}}\n"
    "Then categorize every drawing in the second attached image, writing a rationale for "
    "proficiency for each drawing in the same format as the examples and deducing its final "
    "level.\n";

constexpr std::string_view kContextTemplate =
    "## PROBLEM CONTEXT\n"
    "The problem context for item {{task_id}} appears at the top of the first attached "
    "image.\n"
    "{{context_text}}\n";

constexpr std::string_view kRubricTemplate =
    "## RUBRIC\n"
    "The rubric for item {{task_id}} considers {{component_count}} components:\n"
    "{{component_lines}}\n"
    "{{rule_lines}}\n"
    "{{note_lines}}\n";

constexpr std::string_view kExamplesTemplate =
    "## EXAMPLES\n"
    "Nine example drawings, each with a human coder's label and rationale for proficiency, "
    "appear below the problem context in the first attached image. Learn the rationale format "
    "from them.\n";

constexpr std::string_view kDrawingsTemplate =
    "## DRAWINGS TO SCORE\n"
    "The second attached image contains {{drawing_count}} student drawing(s), labeled "
    "Drawing 1 through Drawing {{drawing_count}}. Assess each one in order.\n";

constexpr std::string_view kDecodingTemplate =
    "## DECODING\n"
    "Reminder: responses are decoded with temperature = {{temperature}} and top_p = "
    "{{top_p}}.\n";

std::string format_real(double v) {
  std::ostringstream ss;
  ss << v;
  return ss.str();
}

std::string expand(std::string_view tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t line_begin = 0;
  while (line_begin <= tpl.size()) {
    std::size_t line_end = tpl.find('\n', line_begin);
    const bool last = line_end == std::string_view::npos;
    std::string_view line = tpl.substr(line_begin, last ? tpl.size() - line_begin
                                                        : line_end - line_begin);
    if (last && line.empty()) break;

    const std::string trimmed = textx::trim(line);
    const bool lone_placeholder = trimmed.size() > 4 && trimmed.starts_with("{{") &&
                                  trimmed.ends_with("}}") &&
                                  trimmed.find("{{", 2) == std::string::npos;
    if (lone_placeholder) {
      const std::string name = trimmed.substr(2, trimmed.size() - 4);
      auto it = values.find(name);
      if (it == values.end()) raise(Errc::BadTemplate, "unknown placeholder {{" + name + "}}");
      if (!it->second.empty()) {
        out += it->second;
        if (!it->second.ends_with('\n')) out += '\n';
      }
      // empty value: drop the line entirely
    } else {
      std::string rendered(line);
      std::size_t pos = 0;
      while ((pos = rendered.find("{{", pos)) != std::string::npos) {
        const std::size_t close = rendered.find("}}", pos + 2);
        if (close == std::string::npos) raise(Errc::BadTemplate, "unterminated placeholder");
        const std::string name = rendered.substr(pos + 2, close - pos - 2);
        auto it = values.find(name);
        if (it == values.end()) raise(Errc::BadTemplate, "unknown placeholder {{" + name + "}}");
        rendered = rendered.substr(0, pos) + it->second + rendered.substr(close + 2);
        pos += it->second.size();
      }
      out += rendered;
      out += '\n';
    }
    if (last) break;
    line_begin = line_end + 1;
  }
  return out;
}

std::string rstrip_newlines(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
  return s;
}

}  // namespace

const TemplateSet& TemplateSet::builtin() {
  static const TemplateSet set{
      std::string(kRoleTemplate),    std::string(kTaskTemplate),
      std::string(kContextTemplate), std::string(kRubricTemplate),
      std::string(kExamplesTemplate), std::string(kDrawingsTemplate),
      std::string(kDecodingTemplate)};
  return set;
}

TemplateSet TemplateSet::from_dir(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    const auto path = dir / name;
    if (!std::filesystem::exists(path))
      raise(Errc::MissingTemplate, "template file missing: " + path.string());
    return textx::read_text_file(path.string());
  };
  TemplateSet set;
  set.role = read("role.txt");
  set.task = read("task.txt");
  set.context = read("context.txt");
  set.rubric = read("rubric.txt");
  set.examples = read("examples.txt");
  set.drawings = read("drawings.txt");
  set.decoding = read("decoding.txt");
  return set;
}

void TemplateSet::write_dir(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream out(dir / name, std::ios::binary | std::ios::trunc);
    if (!out) raise(Errc::PersistenceError, "cannot write template: " + (dir / name).string());
    out << body;
  };
  write("role.txt", role);
  write("task.txt", task);
  write("context.txt", context);
  write("rubric.txt", rubric);
  write("examples.txt", examples);
  write("drawings.txt", drawings);
  write("decoding.txt", decoding);
}

std::string digest_text(std::string_view text) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

CompiledPrompt compile(const TaskDefinition& task, PromptVariant variant,
                       const CompileOptions& options) {
  if (textx::trim(task.context_text).empty())
    raise(Errc::EmptyContext, "task " + task.task_id + " has no problem context");
  if (task.rubric.components.empty())
    raise(Errc::EmptyRubric, "task " + task.task_id + " has no rubric components");
  if (const auto findings = assess::validate_rubric(task.rubric); !findings.empty())
    raise(Errc::InvalidTask, "rubric invalid: " + findings.front().code +
                                 (findings.front().detail.empty() ? ""
                                                                  : " (" + findings.front().detail + ")"));

  const TemplateSet& tpl = options.templates != nullptr ? *options.templates
                                                        : TemplateSet::builtin();
  const auto& rule = task.rubric.rule;

  std::string component_lines;
  for (const auto& c : task.rubric.components) {
    component_lines += "(";
    component_lines += c.letter;
    component_lines += ") ";
    component_lines += c.description;
    component_lines += "\n";
  }

  std::string rule_lines;
  rule_lines += "A drawing is 'Proficient' when at least " + std::to_string(rule.proficient_min) +
                " of the " + std::to_string(rule.component_count) + " components are included.\n";
  rule_lines += "A drawing is 'Developing' when at least " + std::to_string(rule.developing_min) +
                " but fewer than " + std::to_string(rule.proficient_min) +
                " of the components are included.\n";
  rule_lines += "A drawing is 'Beginning' when fewer than " + std::to_string(rule.developing_min) +
                " of the components are included.\n";

  std::string note_lines;
  if (variant != PromptVariant::NoNotes) {
    for (const auto& c : task.rubric.components) {
      auto it = task.rubric.notes.find(c.letter);
      if (it == task.rubric.notes.end() || textx::trim(it->second).empty()) continue;
      note_lines += "Note for (";
      note_lines += c.letter;
      note_lines += "): ";
      note_lines += it->second;
      note_lines += "\n";
    }
  }

  std::map<std::string, std::string> values = {
      {"task_id", task.task_id},
      {"context_text", task.context_text},
      {"component_count", std::to_string(rule.component_count)},
      {"component_lines", component_lines},
      {"rule_lines", rule_lines},
      {"note_lines", note_lines},
      {"drawing_count", std::to_string(options.expected_drawings)},
      {"temperature", format_real(options.temperature)},
      {"top_p", format_real(options.top_p)},
      {"retrieval_line",
       variant == PromptVariant::NoExamples
           ? std::string()
           : std::string("Also retrieve the rationale for proficiency of one random example "
                         "from the examples in the first attached image, as evidence that the "
                         "image was processed.")},
  };

  std::vector<std::string> sections;
  sections.push_back(expand(tpl.role, values));
  sections.push_back(expand(tpl.task, values));
  sections.push_back(expand(tpl.context, values));
  sections.push_back(expand(tpl.rubric, values));
  if (variant != PromptVariant::NoExamples) sections.push_back(expand(tpl.examples, values));
  sections.push_back(expand(tpl.drawings, values));
  sections.push_back(expand(tpl.decoding, values));

  std::string text;
  for (std::size_t i = 0; i < sections.size(); ++i) {
    if (i > 0) text += "\n";
    text += rstrip_newlines(std::move(sections[i]));
    text += "\n";
  }

  CompiledPrompt out;
  out.text = std::move(text);
  out.digest = digest_text(out.text);
  return out;
}

std::vector<LineDiff> diff_variants(const CompiledPrompt& a, const CompiledPrompt& b) {
  auto split = [](const std::string& s) {
    std::vector<std::string> lines;
    std::size_t begin = 0;
    while (begin <= s.size()) {
      const std::size_t end = s.find('\n', begin);
      if (end == std::string::npos) {
        if (begin < s.size()) lines.push_back(s.substr(begin));
        break;
      }
      lines.push_back(s.substr(begin, end - begin));
      begin = end + 1;
    }
    return lines;
  };
  const auto la = split(a.text);
  const auto lb = split(b.text);

  // Longest-common-subsequence table; prompts are small.
  const std::size_t n = la.size(), m = lb.size();
  std::vector<std::vector<std::size_t>> lcs(n + 1, std::vector<std::size_t>(m + 1, 0));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      lcs[i][j] = la[i] == lb[j] ? lcs[i + 1][j + 1] + 1
                                 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    }
  }
  std::vector<LineDiff> diffs;
  std::size_t i = 0, j = 0;
  while (i < n && j < m) {
    if (la[i] == lb[j]) {
      ++i;
      ++j;
    } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
      diffs.push_back({LineDiff::Op::Delete, i, la[i]});
      ++i;
    } else {
      diffs.push_back({LineDiff::Op::Insert, j, lb[j]});
      ++j;
    }
  }
  for (; i < n; ++i) diffs.push_back({LineDiff::Op::Delete, i, la[i]});
  for (; j < m; ++j) diffs.push_back({LineDiff::Op::Insert, j, lb[j]});
  return diffs;
}

}  // namespace nerif::prompt
