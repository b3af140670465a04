#include "nerif/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "nerif/error.hpp"
#include "nerif/raster.hpp"
#include "nerif/rng.hpp"
#include "text.hpp"

namespace nerif::data {

namespace {

using nlohmann::json;

// Minimal RFC-4180 row split: double quotes wrap fields, "" escapes a quote.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

struct RawRow {
  std::string case_id, task_id, image_path, human_label;
  std::size_t row_number;  // 1-based, counting the header
};

std::vector<RawRow> read_csv_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::BadManifest, "cannot open manifest: " + path.string());
  std::vector<RawRow> rows;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (textx::trim(line).empty()) continue;
    const auto fields = split_csv_row(line);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"case_id", "task_id", "image_path", "human_label"})
        raise(Errc::BadManifest,
              "manifest header must be case_id,task_id,image_path,human_label: " + path.string());
      header_seen = true;
      continue;
    }
    if (fields.size() != 4)
      raise(Errc::BadManifest, "row " + std::to_string(line_no) + " has " +
                                   std::to_string(fields.size()) + " fields, expected 4");
    rows.push_back({fields[0], fields[1], fields[2], fields[3], line_no});
  }
  return rows;
}

std::vector<RawRow> read_json_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(Errc::BadManifest, "cannot open manifest: " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    raise(Errc::BadManifest, "manifest is not valid JSON: " + std::string(e.what()));
  }
  if (!doc.is_array()) raise(Errc::BadManifest, "JSON manifest must be an array of objects");
  std::vector<RawRow> rows;
  std::size_t idx = 0;
  for (const auto& entry : doc) {
    ++idx;
    if (!entry.is_object() || !entry.contains("case_id") || !entry.contains("task_id") ||
        !entry.contains("image_path") || !entry.contains("human_label"))
      raise(Errc::BadManifest, "entry " + std::to_string(idx) +
                                   " must carry case_id, task_id, image_path, human_label");
    rows.push_back({entry["case_id"].get<std::string>(), entry["task_id"].get<std::string>(),
                    entry["image_path"].get<std::string>(),
                    entry["human_label"].get<std::string>(), idx});
  }
  return rows;
}

}  // namespace

std::vector<CaseRecord> load_manifest(const std::filesystem::path& path) {
  const bool is_json = path.extension() == ".json";
  const auto rows = is_json ? read_json_rows(path) : read_csv_rows(path);
  const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");

  std::vector<CaseRecord> records;
  records.reserve(rows.size());
  std::set<std::string> seen_ids;
  // Image files often repeat across rows; validate each path once.
  std::set<std::filesystem::path> decoded_ok;

  for (const auto& row : rows) {
    const std::string where = "row " + std::to_string(row.row_number) + " (" + row.case_id + ")";
    if (!seen_ids.insert(row.case_id).second)
      raise(Errc::DuplicateCaseId, "duplicate case_id at " + where);

    const auto label = assess::parse_level(row.human_label);
    if (!label)
      raise(Errc::UnparsableLabel, "label '" + row.human_label + "' at " + where +
                                       " is not one of Beginning/Developing/Proficient");

    std::filesystem::path image(row.image_path);
    if (!image.is_absolute()) image = base / image;
    if (!decoded_ok.contains(image)) {
      decode_image_file(image);  // throws MissingImage / UndecodableImage
      decoded_ok.insert(image);
    }
    records.push_back({row.case_id, image, *label, row.task_id});
  }
  return records;
}

Splits sample_splits(const std::vector<CaseRecord>& records, const SplitSpec& spec) {
  const int quota = spec.n_examples + spec.n_validation + spec.n_test;

  // Group per (task, class); preserve encounter order of cases inside groups.
  std::map<std::string, std::array<std::vector<CaseRecord>, 3>> by_task;
  for (const auto& rec : records)
    by_task[rec.task_id][assess::ordinal(rec.human_label)].push_back(rec);

  Splits out;
  for (auto& [task_id, classes] : by_task) {
    for (int cls = 0; cls < assess::kLevelCount; ++cls) {
      auto& pool = classes[cls];
      if (static_cast<int>(pool.size()) < quota)
        raise(Errc::InsufficientClassCount,
              "task " + task_id + " class " +
                  std::string(assess::level_name(assess::level_from_ordinal(cls))) +
                  " short by " + std::to_string(quota - static_cast<int>(pool.size())) +
                  " cases (" + std::to_string(pool.size()) + " < " + std::to_string(quota) + ")");
      Rng rng(mix64(mix64(spec.seed, fnv1a64(task_id)), static_cast<std::uint64_t>(cls)));
      rng.shuffle(pool);
      auto take = [&](std::vector<CaseRecord>& dst, int from, int count) {
        dst.insert(dst.end(), pool.begin() + from, pool.begin() + from + count);
      };
      take(out.examples, 0, spec.n_examples);
      take(out.validation, spec.n_examples, spec.n_validation);
      take(out.test, spec.n_examples + spec.n_validation, spec.n_test);
    }
  }
  return out;
}

std::vector<Batch> make_batches(const std::vector<CaseRecord>& test_cases) {
  std::vector<Batch> batches;
  for (std::size_t i = 0; i < test_cases.size(); i += kMaxBatchSize) {
    Batch b;
    b.batch_id = static_cast<int>(batches.size());
    const std::size_t end = std::min(i + kMaxBatchSize, test_cases.size());
    b.cases.assign(test_cases.begin() + static_cast<std::ptrdiff_t>(i),
                   test_cases.begin() + static_cast<std::ptrdiff_t>(end));
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace nerif::data
