#include "nerif/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "nerif/error.hpp"

namespace nerif::metrics {

std::int64_t ConfusionMatrix::n() const {
  std::int64_t total = 0;
  for (const auto& row : counts)
    for (auto c : row) total += c;
  return total;
}

std::int64_t ConfusionMatrix::row_total(int i) const {
  return counts[i][0] + counts[i][1] + counts[i][2];
}

std::int64_t ConfusionMatrix::col_total(int j) const {
  return counts[0][j] + counts[1][j] + counts[2][j];
}

std::int64_t ConfusionMatrix::trace() const {
  return counts[0][0] + counts[1][1] + counts[2][2];
}

ConfusionMatrix confusion(
    const std::vector<std::pair<ProficiencyLevel, ProficiencyLevel>>& pairs) {
  if (pairs.empty()) raise(Errc::EmptyInput, "confusion matrix needs at least one pair");
  ConfusionMatrix m;
  for (const auto& [truth, predicted] : pairs)
    ++m.counts[assess::ordinal(truth)][assess::ordinal(predicted)];
  return m;
}

namespace {

constexpr double quad_weight(int i, int j) {
  const double d = static_cast<double>(i - j);
  return 1.0 - d * d / 4.0;  // (k-1)^2 with k = 3
}

}  // namespace

MetricsReport report(const ConfusionMatrix& m) {
  const double n = static_cast<double>(m.n());
  if (n <= 0) raise(Errc::EmptyInput, "empty confusion matrix");

  MetricsReport r;
  r.accuracy = static_cast<double>(m.trace()) / n;

  double precision_sum = 0.0, recall_sum = 0.0, f1_sum = 0.0;
  for (int i = 0; i < 3; ++i) {
    const double row = static_cast<double>(m.row_total(i));
    const double col = static_cast<double>(m.col_total(i));
    const double diag = static_cast<double>(m.counts[i][i]);
    const double recall = row > 0 ? diag / row : 0.0;
    const double precision = col > 0 ? diag / col : 0.0;
    const double f1 = (precision + recall) > 0 ? 2.0 * precision * recall / (precision + recall)
                                               : 0.0;
    r.acc_per_class[i] = recall;
    precision_sum += precision;
    recall_sum += recall;
    f1_sum += f1;
  }
  r.precision_macro = precision_sum / 3.0;
  r.recall_macro = recall_sum / 3.0;
  r.f1_macro = f1_sum / 3.0;

  double po_w = 0.0, pe_w = 0.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double w = quad_weight(i, j);
      po_w += w * static_cast<double>(m.counts[i][j]) / n;
      pe_w += w * (static_cast<double>(m.row_total(i)) / n) *
              (static_cast<double>(m.col_total(j)) / n);
    }
  }
  if (std::abs(1.0 - pe_w) < 1e-12) {
    r.degenerate_agreement = true;
    r.kappa_qw = std::numeric_limits<double>::quiet_NaN();
  } else {
    r.kappa_qw = (po_w - pe_w) / (1.0 - pe_w);
  }
  return r;
}

AggregateReport aggregate(const std::map<std::string, MetricsReport>& reports) {
  if (reports.empty()) raise(Errc::InsufficientItems, "aggregate needs at least one report");

  AggregateReport agg;
  agg.per_item = reports;
  const double k = static_cast<double>(reports.size());

  auto fields = [](MetricsReport& r) {
    return std::array<double*, 8>{&r.accuracy,        &r.acc_per_class[0], &r.acc_per_class[1],
                                  &r.acc_per_class[2], &r.precision_macro,  &r.recall_macro,
                                  &r.f1_macro,         &r.kappa_qw};
  };

  MetricsReport mean{};
  auto mean_f = fields(mean);
  for (const auto& [item, rep] : reports) {
    auto rep_copy = rep;
    auto rep_f = fields(rep_copy);
    for (std::size_t i = 0; i < mean_f.size(); ++i) *mean_f[i] += *rep_f[i];
  }
  for (auto* f : mean_f) *f /= k;
  agg.mean = mean;

  if (reports.size() >= 2) {
    MetricsReport sd{};
    auto sd_f = fields(sd);
    for (const auto& [item, rep] : reports) {
      auto rep_copy = rep;
      auto rep_f = fields(rep_copy);
      for (std::size_t i = 0; i < sd_f.size(); ++i) {
        const double d = *rep_f[i] - *mean_f[i];
        *sd_f[i] += d * d;
      }
    }
    for (auto* f : sd_f) *f = std::sqrt(*f / (k - 1.0));
    agg.sd = sd;
  }
  return agg;
}

namespace {

std::string fmt2(double v) {
  if (std::isnan(v)) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string row_line(const std::vector<std::string>& cells, const std::vector<std::size_t>& w) {
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    line += cells[i];
    if (i + 1 < cells.size()) line.append(w[i] - cells[i].size() + 2, ' ');
  }
  return line;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> widths;
  for (const auto& row : rows) {
    if (widths.size() < row.size()) widths.resize(row.size(), 0);
    for (std::size_t i = 0; i < row.size(); ++i)
      widths[i] = std::max(widths[i], row[i].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out << row_line(rows[r], widths) << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w + 2;
      out << std::string(total > 2 ? total - 2 : total, '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace

std::string render_validation_table(const std::vector<ValidationRow>& rows) {
  std::vector<std::vector<std::string>> cells;
  std::int64_t total_n = 0;
  std::array<std::int64_t, 3> ns{};
  if (!rows.empty()) {
    ns = rows.front().class_n;
    total_n = ns[0] + ns[1] + ns[2];
  }
  cells.push_back({"Item", "Overall (N = " + std::to_string(total_n) + ")",
                   "Beginning (n = " + std::to_string(ns[0]) + ")",
                   "Developing (n = " + std::to_string(ns[1]) + ")",
                   "Proficient (n = " + std::to_string(ns[2]) + ")"});
  MetricsReport mean{};
  for (const auto& row : rows) {
    cells.push_back({row.item, fmt2(row.rep.accuracy), fmt2(row.rep.acc_per_class[0]),
                     fmt2(row.rep.acc_per_class[1]), fmt2(row.rep.acc_per_class[2])});
    mean.accuracy += row.rep.accuracy;
    for (int i = 0; i < 3; ++i) mean.acc_per_class[i] += row.rep.acc_per_class[i];
  }
  if (rows.size() > 1) {
    const double k = static_cast<double>(rows.size());
    cells.push_back({"Mean", fmt2(mean.accuracy / k), fmt2(mean.acc_per_class[0] / k),
                     fmt2(mean.acc_per_class[1] / k), fmt2(mean.acc_per_class[2] / k)});
  }
  return render_table(cells);
}

std::string render_test_table(const std::vector<std::pair<std::string, MetricsReport>>& rows,
                              const MetricsReport* mean_row) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"Item", "Accuracy", "Acc_Beg", "Acc_Dev", "Acc_Prof", "Precision", "Recall",
                   "F1", "Kappa"});
  auto emit = [&](const std::string& item, const MetricsReport& r) {
    cells.push_back({item, fmt2(r.accuracy), fmt2(r.acc_per_class[0]), fmt2(r.acc_per_class[1]),
                     fmt2(r.acc_per_class[2]), fmt2(r.precision_macro), fmt2(r.recall_macro),
                     fmt2(r.f1_macro), fmt2(r.kappa_qw)});
  };
  for (const auto& [item, rep] : rows) emit(item, rep);
  if (mean_row != nullptr) emit("Mean", *mean_row);
  return render_table(cells);
}

std::string render_confusion(const std::string& item, const ConfusionMatrix& m) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"True \\ Predicted (" + item + ")", "Beginning", "Developing", "Proficient"});
  for (int i = 0; i < 3; ++i) {
    cells.push_back({std::string(assess::level_name(assess::level_from_ordinal(i))),
                     std::to_string(m.counts[i][0]), std::to_string(m.counts[i][1]),
                     std::to_string(m.counts[i][2])});
  }
  return render_table(cells);
}

}  // namespace nerif::metrics
