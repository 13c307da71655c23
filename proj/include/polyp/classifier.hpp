#pragma once

#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "polyp/image.hpp"
#include "polyp/nnet.hpp"
#include "polyp/preprocess.hpp"
#include "polyp/prob.hpp"

namespace polyp {

struct PatchPrediction {
  std::string patch_id;
  ProbVector probabilities;
};

struct Patch {
  std::string id;
  RasterImage image;
};

// The pluggable patch-classification boundary. Handles are immutable
// after construction and safe to share across patch workers.
//
//   constant  - every patch gets the same fixed ProbVector
//   recorded  - replays externally produced per-patch vectors by id
//   network   - conform + normalize + TinyResNet forward + softmax
class ClassifierHandle {
 public:
  static ClassifierHandle constant(ProbVector probabilities);
  static ClassifierHandle recorded(
      std::unordered_map<std::string, ProbVector> table);
  static ClassifierHandle network(nnet::TinyResNet model,
                                  NormalizationStats stats,
                                  ConformTarget target);

  // Pure in (handle, patch pixels): repeated calls agree bitwise.
  // Inference never augments. Recorded handles throw
  // MissingPredictionError for an unknown patch_id.
  PatchPrediction classify(const RasterImage& patch,
                           std::string patch_id) const;

  // Element-wise equal to sequential classify calls, in input order.
  // jobs > 1 spreads patches across threads without changing any byte;
  // on failure the error of the earliest failing patch is thrown.
  std::vector<PatchPrediction> classify_batch(const std::vector<Patch>& patches,
                                              int jobs = 1) const;

 private:
  ClassifierHandle() = default;

  enum class Kind { Constant, Recorded, Network } kind_ = Kind::Constant;
  ProbVector constant_;
  std::unordered_map<std::string, ProbVector> table_;
  nnet::TinyResNet model_;
  NormalizationStats stats_;
  ConformTarget target_{};
};

// Recorded predictions TSV: patch_id then six probabilities in canonical
// class order. Rows whose sum is within 1e-2 of 1 are renormalized;
// anything further off is rejected, as are duplicate patch ids.
std::unordered_map<std::string, ProbVector> load_recorded_predictions(
    const std::filesystem::path& path);
void save_recorded_predictions(const std::vector<PatchPrediction>& predictions,
                               const std::filesystem::path& path);

}  // namespace polyp
