#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>

#include "polyp/labels.hpp"

namespace polyp {

// 6x6 prediction-vs-reference counts. Rows are predicted labels, columns
// reference labels.
struct ConfusionMatrix {
  std::array<std::array<long, kNumClasses>, kNumClasses> counts{};

  long total() const;
  long row_sum(ClassLabel predicted) const;
  long col_sum(ClassLabel reference) const;
  long& at(ClassLabel predicted, ClassLabel reference) {
    return counts[label_index(predicted)][label_index(reference)];
  }
  long at(ClassLabel predicted, ClassLabel reference) const {
    return counts[label_index(predicted)][label_index(reference)];
  }
};

// pairs are (predicted, reference). Throws EmptyDatasetError when empty.
ConfusionMatrix confusion(
    std::span<const std::pair<ClassLabel, ClassLabel>> pairs);

// One-vs-rest metrics; every 0/0 is defined as 0 so absent classes cannot
// poison macro averages.
double recall(const ConfusionMatrix& m, ClassLabel c);
double precision(const ConfusionMatrix& m, ClassLabel c);
double f1(const ConfusionMatrix& m, ClassLabel c);
double specificity(const ConfusionMatrix& m, ClassLabel c);
double npv(const ConfusionMatrix& m, ClassLabel c);

// (sensitivity + specificity) / 2: what the headline "accuracy" row of a
// per-class report means here.
double balanced_accuracy(const ConfusionMatrix& m, ClassLabel c);

// Plain one-vs-rest accuracy (TP+TN)/N, distinct from the balanced one.
double ovr_accuracy(const ConfusionMatrix& m, ClassLabel c);

struct Interval {
  double lower = 0.0;
  double upper = 1.0;
};

// Exact binomial confidence interval, found by bisection on the binomial
// tail to absolute tolerance 1e-10. k = 0 pins the lower bound at 0 and
// k = n pins the upper bound at 1.
Interval clopper_pearson(long k, long n, double alpha = 0.05);

struct MetricValue {
  double value = 0.0;
  Interval ci;
};

struct ClassMetrics {
  MetricValue accuracy;  // balanced accuracy
  MetricValue precision;
  MetricValue recall;
  MetricValue f1;
};

// Unweighted arithmetic mean per metric over the six classes (intervals
// not aggregated here; report() attaches them).
std::array<double, 4> macro_totals(
    const std::array<ClassMetrics, kNumClasses>& per_class);

// How interval denominators are chosen.
//
// PooledTotal reproduces the published table: every metric value v gets
// the interval of round(v * n) successes out of n = n_total, regardless
// of the metric's natural denominator. ExactDenominator instead uses the
// metric's own denominator where one exists (recall: reference column,
// precision: prediction row) and falls back to the pooled convention for
// composite metrics (balanced accuracy, F1).
enum class IntervalConvention { PooledTotal, ExactDenominator };

struct MetricReport {
  std::array<ClassMetrics, kNumClasses> per_class;
  ClassMetrics totals;
  long n_total = 0;
  IntervalConvention convention = IntervalConvention::PooledTotal;
};

// All per-class and macro metrics with 95% intervals. n_override replaces
// the interval denominator (not the metric values) when the nominal N of
// a published table differs from the matrix sum.
MetricReport report(const ConfusionMatrix& m,
                    IntervalConvention convention = IntervalConvention::PooledTotal,
                    std::optional<long> n_override = std::nullopt);

// Confusion matrix TSV: a header row of reference labels, then one row
// per predicted label. Matches the report table orientation.
ConfusionMatrix load_confusion_tsv(const std::filesystem::path& path);
void save_confusion_tsv(const ConfusionMatrix& m,
                        const std::filesystem::path& path);

// JSON: per-class objects plus a `totals` object; values as fractions in
// [0,1] with `pct` renderings rounded to one decimal.
std::string report_to_json(const MetricReport& report);

// Fixed-width text table with a final totals line, for the CLI.
std::string report_to_text(const MetricReport& report);

}  // namespace polyp
