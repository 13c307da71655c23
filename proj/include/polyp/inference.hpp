#pragma once

#include <array>
#include <span>
#include <string>

#include "polyp/classifier.hpp"
#include "polyp/tiler.hpp"

namespace polyp {

// Gates a polyp call must clear before it is reported; anything weaker
// falls back to Normal.
struct DecisionThresholds {
  int min_patches = 5;
  double min_mean_confidence = 0.70;
};

struct SlideDecision {
  ClassLabel predicted = ClassLabel::Normal;
  std::array<int, kNumClasses> tallies{};  // argmax counts, Normal included
  std::array<double, kNumClasses> mean_confidence{};  // 0 where tally is 0
  int total_patches = 0;
};

// The slide-level vote. Each patch casts its argmax; only the five polyp
// classes compete (Normal-argmax patches count toward total_patches but
// never toward a polyp tally). The plurality class wins if it has at
// least min_patches supporters whose mean argmax confidence reaches
// min_mean_confidence; ties break by higher mean confidence, then
// canonical order. Everything else, including an empty list, is Normal.
SlideDecision aggregate(std::span<const PatchPrediction> predictions,
                        const DecisionThresholds& thresholds);

// tile + extract + classify_batch + aggregate. Patch ids are "x_y" in
// slide coordinates.
SlideDecision classify_slide(const RasterImage& image,
                             const ClassifierHandle& handle,
                             const PatchSpec& spec,
                             const DecisionThresholds& thresholds,
                             int jobs = 1);

// One JSON document per slide, the `infer` output format.
std::string decision_to_json(const std::string& slide_id,
                             const SlideDecision& decision);

}  // namespace polyp
