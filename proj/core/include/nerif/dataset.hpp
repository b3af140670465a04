#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "nerif/assessment.hpp"

namespace nerif::data {

using assess::ProficiencyLevel;

struct CaseRecord {
  std::string case_id;
  std::filesystem::path image_path;  // resolved against the manifest directory
  ProficiencyLevel human_label = ProficiencyLevel::Beginning;
  std::string task_id;

  bool operator==(const CaseRecord&) const = default;
};

/// Per-class quotas for each split. The default (3, 3, 50) yields the
/// standard 9/9/150 split per task.
struct SplitSpec {
  int n_examples = 3;
  int n_validation = 3;
  int n_test = 50;
  std::uint64_t seed = 0;
};

struct Splits {
  std::vector<CaseRecord> examples;
  std::vector<CaseRecord> validation;
  std::vector<CaseRecord> test;
};

/// One scoring session's worth of cases; never more than three.
struct Batch {
  int batch_id = 0;
  std::vector<CaseRecord> cases;
};

inline constexpr int kMaxBatchSize = 3;

/// Load and validate a manifest. CSV (header
/// `case_id,task_id,image_path,human_label`) or a JSON array of objects with
/// those fields, chosen by file extension. Every row must carry a parsable
/// label and an image that exists and decodes; offending rows are named in
/// the error. Order is preserved.
std::vector<CaseRecord> load_manifest(const std::filesystem::path& path);

/// Deterministic balanced sampling: per (task, class) shuffle keyed by the
/// spec seed, then prefix-take in the order examples, validation, test.
/// Output order is task id ascending, class-major (Beginning, Developing,
/// Proficient), shuffled within class. Throws InsufficientClassCount naming
/// the class and shortfall when a quota cannot be met.
Splits sample_splits(const std::vector<CaseRecord>& records, const SplitSpec& spec);

/// Consecutive triples in input order; the final batch may hold 1-2 cases.
std::vector<Batch> make_batches(const std::vector<CaseRecord>& test_cases);

}  // namespace nerif::data
