#pragma once

// Shared helpers for the test suites: temp dirs, synthetic images, synthetic
// tasks/manifests, and random rubric/script generators for the oracle
// round-trip properties.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nerif/assessment.hpp"
#include "nerif/dataset.hpp"
#include "nerif/gateway.hpp"
#include "nerif/raster.hpp"
#include "nerif/rng.hpp"

namespace testutil {

namespace fs = std::filesystem;
using nerif::assess::ComponentVerdict;
using nerif::assess::ProficiencyLevel;

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    const auto base = fs::temp_directory_path();
    for (int i = 0; i < 10000; ++i) {
      fs::path candidate = base / ("nerif_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                   std::to_string(counter_++));
      std::error_code ec;
      if (fs::create_directory(candidate, ec)) {
        path_ = candidate;
        return;
      }
    }
    throw std::runtime_error("cannot create temp dir");
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static inline int counter_ = 0;
  fs::path path_;
};

inline fs::path write_image(const fs::path& path, int w, int h, nerif::Color c) {
  nerif::write_png(path, nerif::Raster::solid(w, h, c));
  return path;
}

/// A 4-component task in the style of the butter-melting item, with nine
/// class-balanced examples whose rationales mention every component once.
inline nerif::assess::TaskDefinition make_task(const fs::path& dir, const std::string& task_id,
                                               int image_side = 24) {
  fs::create_directories(dir);
  nerif::assess::TaskDefinition task;
  task.task_id = task_id;
  task.context_text =
      "Students heat solid butter in a pan until its state changes. Draw a model that explains "
      "what happens to the butter particles before and after thermal energy is added.";
  task.context_image = "context.png";
  task.base_dir = dir;
  write_image(dir / "context.png", image_side * 2, image_side, {200, 220, 255});

  task.rubric.components = {
      {'A', "change in the state of the butter particles"},
      {'B', "change in the arrangement of the butter particles"},
      {'C', "labels identifying the butter particles"},
      {'D', "keys or arrows describing the motion of the butter particles"},
  };
  task.rubric.rule = nerif::assess::ProficiencyRule::standard(4);
  task.rubric.notes = {
      {'A', "two distinct particle states count as the state change"},
      {'B', "compare the packing of particles before and after heating"},
      {'C', "any text naming the particles counts as a label"},
      {'D', "arrows or motion keys near the particles count"},
  };

  const ProficiencyLevel levels[] = {ProficiencyLevel::Beginning, ProficiencyLevel::Developing,
                                     ProficiencyLevel::Proficient};
  const char* rationales[] = {
      "Only (A) is shown; the model does not include (B), (C), or (D). One component is "
      "included, so the level is Beginning.",
      "The model includes (A) and (B) but does not include (C) or (D). Two of the four "
      "components are included, so the level is Developing.",
      "The model includes (A), (B), (C), and (D). All four components are included, so the "
      "level is Proficient.",
  };
  for (int i = 0; i < 9; ++i) {
    const auto level = levels[i % 3];
    const std::string name = "example_" + std::to_string(i) + ".png";
    write_image(dir / name, image_side, image_side,
                {static_cast<std::uint8_t>(40 + 20 * i), 128, 90});
    task.examples.push_back({name, level, rationales[i % 3]});
  }
  return task;
}

/// Balanced manifest: per_class cases per class per task, one tiny PNG per
/// class so decode validation stays cheap at any scale.
inline fs::path make_manifest(const fs::path& dir, const std::vector<std::string>& task_ids,
                              int per_class, const std::string& filename = "manifest.csv") {
  fs::create_directories(dir);
  write_image(dir / "case_beginning.png", 24, 24, {250, 120, 120});
  write_image(dir / "case_developing.png", 24, 24, {120, 250, 120});
  write_image(dir / "case_proficient.png", 24, 24, {120, 120, 250});

  const fs::path path = dir / filename;
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "case_id,task_id,image_path,human_label\n";
  const char* images[] = {"case_beginning.png", "case_developing.png", "case_proficient.png"};
  for (const auto& task_id : task_ids) {
    for (int cls = 0; cls < 3; ++cls) {
      for (int i = 0; i < per_class; ++i) {
        out << task_id << "-c" << cls << "-" << i << "," << task_id << "," << images[cls] << ","
            << nerif::assess::level_name(nerif::assess::level_from_ordinal(cls)) << "\n";
      }
    }
  }
  return path;
}

/// Random rubric with every level reachable (developing_min < proficient_min).
inline nerif::assess::Rubric random_rubric(nerif::Rng& rng) {
  static const char* kDescriptions[] = {
      "state change of the substance",  "arrangement of the particles",
      "labels naming the objects",      "motion markers near the particles",
      "before and after contrast",      "energy transfer arrows",
  };
  nerif::assess::Rubric rubric;
  const int n = 2 + static_cast<int>(rng.bounded(3));
  for (int i = 0; i < n; ++i)
    rubric.components.push_back(
        {static_cast<char>('A' + i), kDescriptions[rng.bounded(6)]});
  const int developing_min = 1 + static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n - 1)));
  const int proficient_min =
      developing_min + 1 +
      static_cast<int>(rng.bounded(static_cast<std::uint64_t>(n - developing_min)));
  rubric.rule = {n, proficient_min, developing_min};
  for (const auto& c : rubric.components) {
    if (rng.bounded(2) == 0) rubric.notes[c.letter] = "look closely for this aspect";
  }
  return rubric;
}

inline nerif::vlm::OracleScript random_script(nerif::Rng& rng,
                                              const std::vector<std::string>& case_ids,
                                              const nerif::assess::Rubric& rubric) {
  nerif::vlm::OracleScript script;
  script.seed = rng.next_u64();
  for (const auto& case_id : case_ids) {
    script.hidden_labels[case_id] =
        nerif::assess::level_from_ordinal(static_cast<int>(rng.bounded(3)));
    if (rng.bounded(2) == 0) {
      nerif::assess::VerdictMap verdicts;
      for (const auto& c : rubric.components)
        verdicts[c.letter] = static_cast<ComponentVerdict>(rng.bounded(3));
      script.hidden_verdicts[case_id] = std::move(verdicts);
    }
  }
  return script;
}

}  // namespace testutil
