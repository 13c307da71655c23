#pragma once

#include <utility>
#include <vector>

#include "polyp/manifest.hpp"
#include "polyp/rng.hpp"

namespace polyp {

// Stratified train/validation split.
//
// Per class, round_half_up(n_c * validation_fraction) records go to
// validation (at least 1 when n_c >= 2), the rest to train. Membership is
// drawn with the stream; records keep their manifest order inside each
// half, so identical seeds give identical, diff-stable outputs.
//
// Returned records carry split_tag Train / Validation. Throws
// EmptyDatasetError on an empty input.
std::pair<std::vector<SlideRecord>, std::vector<SlideRecord>> split_dataset(
    const std::vector<SlideRecord>& records, double validation_fraction,
    RandomStream& rng);

}  // namespace polyp
