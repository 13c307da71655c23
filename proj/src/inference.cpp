#include "polyp/inference.hpp"

#include <json.hpp>

namespace polyp {

SlideDecision aggregate(std::span<const PatchPrediction> predictions,
                        const DecisionThresholds& thresholds) {
  SlideDecision d;
  std::array<double, kNumClasses> confidence_sum{};
  for (const auto& pred : predictions) {
    auto [label, confidence] = argmax_class(pred.probabilities);
    int i = label_index(label);
    d.tallies[i] += 1;
    confidence_sum[i] += confidence;
  }
  d.total_patches = static_cast<int>(predictions.size());
  for (int i = 0; i < kNumClasses; ++i) {
    d.mean_confidence[i] =
        d.tallies[i] > 0 ? confidence_sum[i] / d.tallies[i] : 0.0;
  }

  // Candidate: best polyp class by (tally, mean confidence, canonical
  // order). Normal never competes; it is the fallback.
  int candidate = -1;
  for (int i = 0; i < kNumClasses - 1; ++i) {
    if (d.tallies[i] == 0) continue;
    if (candidate < 0 || d.tallies[i] > d.tallies[candidate] ||
        (d.tallies[i] == d.tallies[candidate] &&
         d.mean_confidence[i] > d.mean_confidence[candidate])) {
      candidate = i;
    }
  }

  if (candidate >= 0 && d.tallies[candidate] >= thresholds.min_patches &&
      d.mean_confidence[candidate] >= thresholds.min_mean_confidence) {
    d.predicted = static_cast<ClassLabel>(candidate);
  } else {
    d.predicted = ClassLabel::Normal;
  }
  return d;
}

SlideDecision classify_slide(const RasterImage& image,
                             const ClassifierHandle& handle,
                             const PatchSpec& spec,
                             const DecisionThresholds& thresholds, int jobs) {
  std::vector<Patch> patches;
  for (PatchOrigin origin : tile(image.width, image.height, spec)) {
    patches.push_back({std::to_string(origin.x) + "_" + std::to_string(origin.y),
                       extract(image, origin, spec)});
  }
  auto predictions = handle.classify_batch(patches, jobs);
  return aggregate(predictions, thresholds);
}

std::string decision_to_json(const std::string& slide_id,
                             const SlideDecision& decision) {
  nlohmann::ordered_json j;
  j["slide_id"] = slide_id;
  j["predicted"] = label_code(decision.predicted);
  j["total_patches"] = decision.total_patches;
  nlohmann::ordered_json tallies, confidence;
  for (ClassLabel c : kAllLabels) {
    tallies[std::string(label_code(c))] = decision.tallies[label_index(c)];
    confidence[std::string(label_code(c))] =
        decision.mean_confidence[label_index(c)];
  }
  j["tallies"] = tallies;
  j["mean_confidence"] = confidence;
  return j.dump(2) + "\n";
}

}  // namespace polyp
