#include "polyp/split.hpp"

#include <array>
#include <cmath>

#include "polyp/errors.hpp"

namespace polyp {

std::pair<std::vector<SlideRecord>, std::vector<SlideRecord>> split_dataset(
    const std::vector<SlideRecord>& records, double validation_fraction,
    RandomStream& rng) {
  if (records.empty()) throw EmptyDatasetError("split_dataset: no records");
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    throw RangeError("validation_fraction must be in (0, 1)");
  }

  std::array<std::vector<std::size_t>, kNumClasses> by_class;
  for (std::size_t i = 0; i < records.size(); ++i) {
    by_class[label_index(records[i].reference_label)].push_back(i);
  }

  std::vector<bool> to_validation(records.size(), false);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& idx = by_class[c];
    std::size_t n = idx.size();
    if (n == 0) continue;
    auto want = static_cast<std::size_t>(
        std::floor(static_cast<double>(n) * validation_fraction + 0.5));
    if (want == 0 && n >= 2) want = 1;
    if (want > n) want = n;
    for (std::size_t pick : rng.sample_without_replacement(n, want)) {
      to_validation[idx[pick]] = true;
    }
  }

  std::pair<std::vector<SlideRecord>, std::vector<SlideRecord>> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    SlideRecord rec = records[i];
    if (to_validation[i]) {
      rec.split_tag = SplitTag::Validation;
      out.second.push_back(std::move(rec));
    } else {
      rec.split_tag = SplitTag::Train;
      out.first.push_back(std::move(rec));
    }
  }
  return out;
}

}  // namespace polyp
