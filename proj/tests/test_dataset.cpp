#include <doctest.h>

#include <fstream>
#include <set>

#include "nerif/dataset.hpp"
#include "nerif/error.hpp"
#include "testutil.hpp"

using namespace nerif;
using testutil::TempDir;

TEST_CASE("csv manifest loads, preserves order, resolves paths") {
  TempDir dir("manifest");
  const auto path = testutil::make_manifest(dir.path(), {"M3-1"}, 2);
  const auto records = data::load_manifest(path);
  REQUIRE(records.size() == 6);
  CHECK(records[0].case_id == "M3-1-c0-0");
  CHECK(records[0].human_label == assess::ProficiencyLevel::Beginning);
  CHECK(records[5].human_label == assess::ProficiencyLevel::Proficient);
  CHECK(std::filesystem::exists(records[0].image_path));
}

TEST_CASE("900-row balanced manifest over 6 tasks") {
  TempDir dir("manifest900");
  const auto path = testutil::make_manifest(
      dir.path(), {"R1-1", "J2-1", "M3-1", "H4-1", "H5-1", "J6-1"}, 50);
  const auto records = data::load_manifest(path);
  CHECK(records.size() == 900);
}

TEST_CASE("manifest edge cases") {
  TempDir dir("manifest_edge");

  SUBCASE("empty file yields empty list") {
    const auto path = dir / "empty.csv";
    std::ofstream(path).close();
    CHECK(data::load_manifest(path).empty());
  }
  SUBCASE("header-only yields empty list") {
    const auto path = dir / "header.csv";
    std::ofstream(path) << "case_id,task_id,image_path,human_label\n";
    CHECK(data::load_manifest(path).empty());
  }
  SUBCASE("unknown label is refused with the row named") {
    testutil::write_image(dir / "img.png", 8, 8, {1, 2, 3});
    const auto path = dir / "bad_label.csv";
    std::ofstream(path) << "case_id,task_id,image_path,human_label\n"
                        << "c1,T,img.png,Advanced\n";
    try {
      data::load_manifest(path);
      FAIL("expected UnparsableLabel");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::UnparsableLabel);
      CHECK(std::string(e.what()).find("c1") != std::string::npos);
    }
  }
  SUBCASE("missing image file") {
    const auto path = dir / "missing.csv";
    std::ofstream(path) << "case_id,task_id,image_path,human_label\n"
                        << "c1,T,nowhere.png,Beginning\n";
    CHECK_THROWS_AS(data::load_manifest(path), Error);
  }
  SUBCASE("undecodable image file") {
    const auto garbage = dir / "garbage.png";
    std::ofstream(garbage) << "this is not a png";
    const auto path = dir / "garbage.csv";
    std::ofstream(path) << "case_id,task_id,image_path,human_label\n"
                        << "c1,T,garbage.png,Beginning\n";
    try {
      data::load_manifest(path);
      FAIL("expected UndecodableImage");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::UndecodableImage);
    }
  }
  SUBCASE("duplicate case id") {
    testutil::write_image(dir / "img.png", 8, 8, {1, 2, 3});
    const auto path = dir / "dup.csv";
    std::ofstream(path) << "case_id,task_id,image_path,human_label\n"
                        << "c1,T,img.png,Beginning\n"
                        << "c1,T,img.png,Developing\n";
    try {
      data::load_manifest(path);
      FAIL("expected DuplicateCaseId");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::DuplicateCaseId);
    }
  }
  SUBCASE("bad header is refused") {
    const auto path = dir / "head.csv";
    std::ofstream(path) << "id,task,image,label\nc1,T,img.png,Beginning\n";
    CHECK_THROWS_AS(data::load_manifest(path), Error);
  }
}

TEST_CASE("json manifest") {
  TempDir dir("manifest_json");
  testutil::write_image(dir / "img.png", 8, 8, {9, 9, 9});
  const auto path = dir / "cases.json";
  std::ofstream(path) << R"([
    {"case_id": "a", "task_id": "T", "image_path": "img.png", "human_label": "Proficient"},
    {"case_id": "b", "task_id": "T", "image_path": "img.png", "human_label": "beginning"}
  ])";
  const auto records = data::load_manifest(path);
  REQUIRE(records.size() == 2);
  CHECK(records[0].human_label == assess::ProficiencyLevel::Proficient);
  CHECK(records[1].human_label == assess::ProficiencyLevel::Beginning);
}

TEST_CASE("default split spec yields 9/9/150 per task, 3/3/50 per class") {
  TempDir dir("split_default");
  const auto path = testutil::make_manifest(dir.path(), {"M3-1"}, 56);
  const auto records = data::load_manifest(path);
  data::SplitSpec spec;  // (3, 3, 50)
  spec.seed = 42;
  const auto splits = data::sample_splits(records, spec);
  CHECK(splits.examples.size() == 9);
  CHECK(splits.validation.size() == 9);
  CHECK(splits.test.size() == 150);

  std::array<int, 3> per_class{};
  for (const auto& rec : splits.test) ++per_class[assess::ordinal(rec.human_label)];
  for (int c : per_class) CHECK(c == 50);

  SUBCASE("splits are pairwise disjoint") {
    std::set<std::string> seen;
    for (const auto* split : {&splits.examples, &splits.validation, &splits.test})
      for (const auto& rec : *split) CHECK(seen.insert(rec.case_id).second);
  }
  SUBCASE("deterministic for a fixed seed") {
    const auto again = data::sample_splits(records, spec);
    CHECK(again.test == splits.test);
    CHECK(again.examples == splits.examples);
    CHECK(again.validation == splits.validation);
  }
  SUBCASE("distinct seeds move the test split") {
    auto other_spec = spec;
    other_spec.seed = 43;
    const auto other = data::sample_splits(records, other_spec);
    CHECK(other.test != splits.test);
  }
}

TEST_CASE("insufficient class count names the class and shortfall") {
  TempDir dir("split_short");
  // 56 per class needed by the default spec; Proficient gets only 49.
  const auto path = dir / "short.csv";
  testutil::write_image(dir / "img.png", 8, 8, {5, 5, 5});
  std::ofstream out(path);
  out << "case_id,task_id,image_path,human_label\n";
  auto emit = [&](const char* level, int count) {
    for (int i = 0; i < count; ++i)
      out << level[0] << i << ",T,img.png," << level << "\n";
  };
  emit("Beginning", 60);
  emit("Developing", 60);
  emit("Proficient", 49);
  out.close();

  const auto records = data::load_manifest(path);
  try {
    data::sample_splits(records, data::SplitSpec{3, 3, 50, 1});
    FAIL("expected InsufficientClassCount");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InsufficientClassCount);
    const std::string what = e.what();
    CHECK(what.find("Proficient") != std::string::npos);
    CHECK(what.find("short by 7") != std::string::npos);
  }
}

TEST_CASE("multi-task pools are sampled per task") {
  TempDir dir("split_multi");
  const auto path = testutil::make_manifest(dir.path(), {"A1", "B2"}, 8);
  const auto records = data::load_manifest(path);
  const auto splits = data::sample_splits(records, data::SplitSpec{1, 1, 4, 7});
  CHECK(splits.test.size() == 2 * 3 * 4);
  std::map<std::string, int> per_task;
  for (const auto& rec : splits.test) ++per_task[rec.task_id];
  CHECK(per_task["A1"] == 12);
  CHECK(per_task["B2"] == 12);
}

TEST_CASE("balance property holds for every split") {
  TempDir dir("split_balance");
  const auto path = testutil::make_manifest(dir.path(), {"T"}, 12);
  const auto splits =
      data::sample_splits(data::load_manifest(path), data::SplitSpec{2, 3, 5, 11});
  for (const auto* split : {&splits.examples, &splits.validation, &splits.test}) {
    std::array<int, 3> per_class{};
    for (const auto& rec : *split) ++per_class[assess::ordinal(rec.human_label)];
    CHECK(per_class[0] == per_class[1]);
    CHECK(per_class[1] == per_class[2]);
  }
}

TEST_CASE("make_batches") {
  auto cases = [](int n) {
    std::vector<data::CaseRecord> out;
    for (int i = 0; i < n; ++i)
      out.push_back({"c" + std::to_string(i), "x.png", assess::ProficiencyLevel::Beginning, "T"});
    return out;
  };

  SUBCASE("150 cases make 50 batches of 3") {
    const auto batches = data::make_batches(cases(150));
    CHECK(batches.size() == 50);
    for (const auto& b : batches) CHECK(b.cases.size() == 3);
  }
  SUBCASE("0 cases make 0 batches") { CHECK(data::make_batches({}).empty()); }
  SUBCASE("7 cases make sizes 3,3,1") {
    const auto batches = data::make_batches(cases(7));
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].cases.size() == 3);
    CHECK(batches[1].cases.size() == 3);
    CHECK(batches[2].cases.size() == 1);
  }
  SUBCASE("partition property: concatenation reproduces the input exactly") {
    const auto input = cases(200);
    const auto batches = data::make_batches(input);
    std::vector<data::CaseRecord> rebuilt;
    for (const auto& b : batches)
      rebuilt.insert(rebuilt.end(), b.cases.begin(), b.cases.end());
    CHECK(rebuilt == input);
    for (std::size_t i = 0; i < batches.size(); ++i)
      CHECK(batches[i].batch_id == static_cast<int>(i));
  }
}
