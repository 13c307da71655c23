#include "polyp/evaluation.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "polyp/errors.hpp"
#include "polyp/io_util.hpp"

namespace polyp {

namespace {

// log(x!), memoized per thread; the CDF below hits it in a tight loop.
double log_factorial(long x) {
  thread_local std::vector<double> cache{0.0, 0.0};
  while (static_cast<long>(cache.size()) <= x) {
    cache.push_back(cache.back() +
                    std::log(static_cast<double>(cache.size())));
  }
  return cache[static_cast<std::size_t>(x)];
}

// log of C(n,k) p^k (1-p)^(n-k), safe at the p-boundaries.
double log_binom_term(long n, long k, double p) {
  double log_choose =
      log_factorial(n) - log_factorial(k) - log_factorial(n - k);
  double lp = k == 0 ? 0.0 : k * std::log(p);
  double lq = (n - k) == 0 ? 0.0 : (n - k) * std::log1p(-p);
  return log_choose + lp + lq;
}

// P(X <= k) for X ~ Binomial(n, p), by direct log-space summation.
double binom_cdf(long k, long n, double p) {
  if (p <= 0.0) return 1.0;
  if (p >= 1.0) return k >= n ? 1.0 : 0.0;
  double sum = 0.0;
  for (long i = 0; i <= k; ++i) sum += std::exp(log_binom_term(n, i, p));
  return std::min(1.0, sum);
}

// Bisection for a monotone decreasing-in-p function hitting `target`.
template <typename Fn>
double bisect_decreasing(Fn&& fn, double target) {
  double lo = 0.0, hi = 1.0;
  for (int iter = 0; iter < 60 && hi - lo > 1e-10; ++iter) {
    double mid = 0.5 * (lo + hi);
    if (fn(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double ratio_or_zero(long num, long den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double pct1(double v) { return std::round(v * 1000.0) / 10.0; }

nlohmann::ordered_json metric_json(const MetricValue& mv) {
  return {{"value", mv.value},
          {"pct", pct1(mv.value)},
          {"lower", mv.ci.lower},
          {"upper", mv.ci.upper},
          {"lower_pct", pct1(mv.ci.lower)},
          {"upper_pct", pct1(mv.ci.upper)}};
}

}  // namespace

long ConfusionMatrix::total() const {
  long t = 0;
  for (const auto& row : counts) {
    for (long v : row) t += v;
  }
  return t;
}

long ConfusionMatrix::row_sum(ClassLabel predicted) const {
  long t = 0;
  for (long v : counts[label_index(predicted)]) t += v;
  return t;
}

long ConfusionMatrix::col_sum(ClassLabel reference) const {
  long t = 0;
  for (const auto& row : counts) t += row[label_index(reference)];
  return t;
}

ConfusionMatrix confusion(
    std::span<const std::pair<ClassLabel, ClassLabel>> pairs) {
  if (pairs.empty()) throw EmptyDatasetError("confusion: no pairs");
  ConfusionMatrix m;
  for (auto [predicted, reference] : pairs) m.at(predicted, reference) += 1;
  return m;
}

double recall(const ConfusionMatrix& m, ClassLabel c) {
  return ratio_or_zero(m.at(c, c), m.col_sum(c));
}

double precision(const ConfusionMatrix& m, ClassLabel c) {
  return ratio_or_zero(m.at(c, c), m.row_sum(c));
}

double f1(const ConfusionMatrix& m, ClassLabel c) {
  double p = precision(m, c);
  double r = recall(m, c);
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

double specificity(const ConfusionMatrix& m, ClassLabel c) {
  long tp = m.at(c, c);
  long fp = m.row_sum(c) - tp;
  long tn = m.total() - m.row_sum(c) - m.col_sum(c) + tp;
  return ratio_or_zero(tn, tn + fp);
}

double npv(const ConfusionMatrix& m, ClassLabel c) {
  long tp = m.at(c, c);
  long fn = m.col_sum(c) - tp;
  long tn = m.total() - m.row_sum(c) - m.col_sum(c) + tp;
  return ratio_or_zero(tn, tn + fn);
}

double balanced_accuracy(const ConfusionMatrix& m, ClassLabel c) {
  return 0.5 * (recall(m, c) + specificity(m, c));
}

double ovr_accuracy(const ConfusionMatrix& m, ClassLabel c) {
  long tp = m.at(c, c);
  long tn = m.total() - m.row_sum(c) - m.col_sum(c) + tp;
  return ratio_or_zero(tp + tn, m.total());
}

Interval clopper_pearson(long k, long n, double alpha) {
  if (n < 1 || k < 0 || k > n) {
    throw RangeError("clopper_pearson: need 0 <= k <= n, n >= 1; got k=" +
                     std::to_string(k) + " n=" + std::to_string(n));
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw RangeError("clopper_pearson: alpha must be in (0, 1)");
  }
  double half = alpha / 2.0;
  Interval ci;
  // Lower: the p where P(X >= k) = alpha/2. P(X >= k) rises with p, so
  // 1 - P(X >= k) = P(X <= k-1) falls with p.
  ci.lower = k == 0 ? 0.0
                    : bisect_decreasing(
                          [&](double p) { return binom_cdf(k - 1, n, p); },
                          1.0 - half);
  // Upper: the p where P(X <= k) = alpha/2.
  ci.upper = k == n ? 1.0
                    : bisect_decreasing(
                          [&](double p) { return binom_cdf(k, n, p); }, half);
  return ci;
}

std::array<double, 4> macro_totals(
    const std::array<ClassMetrics, kNumClasses>& per_class) {
  std::array<double, 4> sums{};
  for (const auto& cm : per_class) {
    sums[0] += cm.accuracy.value;
    sums[1] += cm.precision.value;
    sums[2] += cm.recall.value;
    sums[3] += cm.f1.value;
  }
  for (double& s : sums) s /= kNumClasses;
  return sums;
}

MetricReport report(const ConfusionMatrix& m, IntervalConvention convention,
                    std::optional<long> n_override) {
  long matrix_total = m.total();
  if (matrix_total < 1) throw EmptyDatasetError("report: empty matrix");
  long n_ci = n_override.value_or(matrix_total);

  MetricReport rep;
  rep.n_total = n_ci;
  rep.convention = convention;

  auto pooled = [&](double v) {
    return clopper_pearson(std::lround(v * static_cast<double>(n_ci)), n_ci);
  };
  auto exact = [&](long k, long den) {
    return den == 0 ? clopper_pearson(0, n_ci) : clopper_pearson(k, den);
  };

  for (ClassLabel c : kAllLabels) {
    ClassMetrics cm;
    cm.accuracy.value = balanced_accuracy(m, c);
    cm.precision.value = precision(m, c);
    cm.recall.value = recall(m, c);
    cm.f1.value = f1(m, c);
    if (convention == IntervalConvention::ExactDenominator) {
      cm.recall.ci = exact(m.at(c, c), m.col_sum(c));
      cm.precision.ci = exact(m.at(c, c), m.row_sum(c));
      // Composite metrics have no single binomial denominator; keep the
      // pooled convention for them.
      cm.accuracy.ci = pooled(cm.accuracy.value);
      cm.f1.ci = pooled(cm.f1.value);
    } else {
      cm.accuracy.ci = pooled(cm.accuracy.value);
      cm.precision.ci = pooled(cm.precision.value);
      cm.recall.ci = pooled(cm.recall.value);
      cm.f1.ci = pooled(cm.f1.value);
    }
    rep.per_class[label_index(c)] = cm;
  }

  auto totals = macro_totals(rep.per_class);
  rep.totals.accuracy.value = totals[0];
  rep.totals.precision.value = totals[1];
  rep.totals.recall.value = totals[2];
  rep.totals.f1.value = totals[3];
  rep.totals.accuracy.ci = pooled(totals[0]);
  rep.totals.precision.ci = pooled(totals[1]);
  rep.totals.recall.ci = pooled(totals[2]);
  rep.totals.f1.ci = pooled(totals[3]);
  return rep;
}

ConfusionMatrix load_confusion_tsv(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::istringstream row(line);
    std::string field;
    while (std::getline(row, field, '\t')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  if (rows.size() != kNumClasses + 1) {
    throw ParseError("confusion TSV needs a header plus 6 rows, got " +
                         std::to_string(rows.size()),
                     line_no);
  }
  // Header: empty corner cell then the reference labels in order.
  const auto& header = rows[0];
  if (header.size() != kNumClasses + 1) {
    throw ParseError("confusion header needs 6 reference labels", 1);
  }
  std::array<ClassLabel, kNumClasses> col_label;
  for (int c = 0; c < kNumClasses; ++c) {
    col_label[c] = parse_label(header[c + 1]);
  }
  ConfusionMatrix m;
  for (int r = 0; r < kNumClasses; ++r) {
    const auto& row = rows[r + 1];
    if (row.size() != kNumClasses + 1) {
      throw ParseError("confusion row needs a label and 6 counts", r + 2);
    }
    ClassLabel predicted = parse_label(row[0]);
    for (int c = 0; c < kNumClasses; ++c) {
      long v = 0;
      try {
        v = std::stol(row[c + 1]);
      } catch (const std::exception&) {
        throw ParseError("bad count \"" + row[c + 1] + "\"", r + 2);
      }
      if (v < 0) throw ParseError("negative count", r + 2);
      m.at(predicted, col_label[c]) += v;
    }
  }
  return m;
}

void save_confusion_tsv(const ConfusionMatrix& m,
                        const std::filesystem::path& path) {
  std::ostringstream out;
  for (ClassLabel c : kAllLabels) out << '\t' << label_code(c);
  out << '\n';
  for (ClassLabel p : kAllLabels) {
    out << label_code(p);
    for (ClassLabel r : kAllLabels) out << '\t' << m.at(p, r);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

std::string report_to_json(const MetricReport& report) {
  nlohmann::ordered_json j;
  j["n_total"] = report.n_total;
  j["interval_convention"] =
      report.convention == IntervalConvention::PooledTotal ? "pooled-total"
                                                           : "exact-denominator";
  nlohmann::ordered_json classes;
  for (ClassLabel c : kAllLabels) {
    const auto& cm = report.per_class[label_index(c)];
    classes[std::string(label_code(c))] = {
        {"accuracy", metric_json(cm.accuracy)},
        {"precision", metric_json(cm.precision)},
        {"recall", metric_json(cm.recall)},
        {"f1", metric_json(cm.f1)},
    };
  }
  j["classes"] = classes;
  j["totals"] = {
      {"accuracy", metric_json(report.totals.accuracy)},
      {"precision", metric_json(report.totals.precision)},
      {"recall", metric_json(report.totals.recall)},
      {"f1", metric_json(report.totals.f1)},
  };
  return j.dump(2) + "\n";
}

std::string report_to_text(const MetricReport& report) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(1);
  auto cell = [&](const MetricValue& mv) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(1) << pct1(mv.value) << " ("
      << pct1(mv.ci.lower) << "-" << pct1(mv.ci.upper) << ")";
    return s.str();
  };
  out << std::left << std::setw(10) << "metric";
  for (ClassLabel c : kAllLabels) {
    out << std::setw(20) << label_code(c);
  }
  out << "total\n";
  const char* names[4] = {"accuracy", "precision", "recall", "f1"};
  for (int metric = 0; metric < 4; ++metric) {
    out << std::left << std::setw(10) << names[metric];
    auto pick = [&](const ClassMetrics& cm) -> const MetricValue& {
      switch (metric) {
        case 0: return cm.accuracy;
        case 1: return cm.precision;
        case 2: return cm.recall;
        default: return cm.f1;
      }
    };
    for (ClassLabel c : kAllLabels) {
      out << std::setw(20) << cell(pick(report.per_class[label_index(c)]));
    }
    out << cell(pick(report.totals)) << '\n';
  }
  out << "totals: accuracy " << pct1(report.totals.accuracy.value)
      << "% precision " << pct1(report.totals.precision.value) << "% recall "
      << pct1(report.totals.recall.value) << "% f1 "
      << pct1(report.totals.f1.value) << "% (n=" << report.n_total << ")\n";
  return out.str();
}

}  // namespace polyp
