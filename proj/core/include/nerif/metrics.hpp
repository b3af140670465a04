#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nerif/assessment.hpp"

namespace nerif::metrics {

using assess::ProficiencyLevel;

/// 3x3 agreement counts; rows are the true label ordinal, columns the
/// predicted one, in the fixed class order Beginning, Developing, Proficient.
struct ConfusionMatrix {
  std::array<std::array<std::int64_t, 3>, 3> counts{};

  std::int64_t n() const;
  std::int64_t row_total(int i) const;
  std::int64_t col_total(int j) const;
  std::int64_t trace() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

ConfusionMatrix confusion(
    const std::vector<std::pair<ProficiencyLevel, ProficiencyLevel>>& pairs);

/// The Table-2-shaped statistics row. Per-class accuracy equals per-class
/// recall by definition; it is computed once and exposed as acc_per_class to
/// keep the two from drifting apart.
struct MetricsReport {
  double accuracy = 0.0;
  std::array<double, 3> acc_per_class{};  // Acc_Beg, Acc_Dev, Acc_Prof
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  double kappa_qw = 0.0;            // NaN when degenerate_agreement
  bool degenerate_agreement = false;  // both margins collapse to one class
};

/// Accuracy, macro precision/recall/F1 (never-seen classes contribute 0), and
/// Cohen's quadratic-weighted kappa with w_ij = 1 - (i-j)^2/(k-1)^2, k = 3.
MetricsReport report(const ConfusionMatrix& m);

struct AggregateReport {
  std::map<std::string, MetricsReport> per_item;
  MetricsReport mean;
  std::optional<MetricsReport> sd;  // sample SD (n-1); absent for fewer than 2 items
};

AggregateReport aggregate(const std::map<std::string, MetricsReport>& reports);

/// Aligned-column plain-text tables. Values printed at 2 decimals.
struct ValidationRow {
  std::string item;
  MetricsReport rep;
  std::array<std::int64_t, 3> class_n{};
};

std::string render_validation_table(const std::vector<ValidationRow>& rows);
std::string render_test_table(const std::vector<std::pair<std::string, MetricsReport>>& rows,
                              const MetricsReport* mean_row);
std::string render_confusion(const std::string& item, const ConfusionMatrix& m);

}  // namespace nerif::metrics
