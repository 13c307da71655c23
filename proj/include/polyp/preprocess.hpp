#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include "polyp/image.hpp"
#include "polyp/rng.hpp"

namespace polyp {

// Dimensions every training/inference image is conformed to.
struct ConformTarget {
  int width = 0;
  int height = 0;
};

// Per-channel dataset constants, computed on training data only.
struct NormalizationStats {
  std::array<double, kChannels> mean{};
  std::array<double, kChannels> stddev{};  // population std
};

inline constexpr double kStdEpsilon = 1e-6;  // divisor floor in normalize

// Principal directions of the RGB pixel cloud (intensities on [0,1]).
// Column j of eigenvectors pairs with eigenvalues[j]; eigenvalues are
// sorted descending and clamped at 0.
struct ColorPCA {
  std::array<double, kChannels> eigenvalues{};
  std::array<std::array<double, kChannels>, kChannels> eigenvectors{};
};

enum class RotationMode {
  None,           // k fixed at 0
  RandomQuarter,  // k uniform in {0,1,2,3} per sample
  AllFour,        // exhaustive: augment_expand emits all four rotations
};

struct AugmentConfig {
  double jitter_sigma = 0.1;
  double flip_probability = 0.5;
  RotationMode rotation_mode = RotationMode::RandomQuarter;
};

// Element-wise lower median of (width, height) over a without-replacement
// subset of ceil(n * subset_fraction) entries.
ConformTarget compute_conform_target(
    const std::vector<std::pair<int, int>>& dims, double subset_fraction,
    RandomStream& rng);

// If either dimension exceeds the target, downscales uniformly (bilinear)
// by min(target_w/w, target_h/h), then pads with zeros to exactly the
// target, content at the top-left.
RasterImage conform_size(const RasterImage& image, ConformTarget target);

// Streaming accumulators so the CLI can fold over images it loads one at
// a time; the span front-ends below are the spec-facing operations.
class StatsAccumulator {
 public:
  void add(const RasterImage& image);
  NormalizationStats finish() const;  // throws EmptyDatasetError if empty

 private:
  std::array<double, kChannels> sum_{};
  std::array<double, kChannels> sum_sq_{};
  std::size_t count_ = 0;
};

class ColorPCAAccumulator {
 public:
  void add(const RasterImage& image);
  ColorPCA finish() const;  // throws InsufficientDataError below 2 pixels

 private:
  std::array<double, kChannels> sum_{};
  std::array<std::array<double, kChannels>, kChannels> prod_{};
  std::size_t count_ = 0;
};

NormalizationStats compute_stats(std::span<const RasterImage> images);
ColorPCA fit_color_pca(std::span<const RasterImage> images);

// x -> (x - mean_c) / max(std_c, kStdEpsilon) per channel.
TensorImage normalize(const RasterImage& image,
                      const NormalizationStats& stats);

// Draws alpha_i ~ Normal(0, sigma^2) once, adds the single RGB offset
// sum_i alpha_i * lambda_i * v_i to every pixel. Always consumes the same
// number of draws, so streams stay aligned across sigma settings.
TensorImage jitter(const TensorImage& image, const ColorPCA& pca,
                   RandomStream& rng, double sigma);

// Exact quarter-turn rotations (clockwise) and horizontal mirror, for both
// pixel carriers. k must be in {0,1,2,3}.
RasterImage rotate90(const RasterImage& image, int k);
TensorImage rotate90(const TensorImage& image, int k);
RasterImage hflip(const RasterImage& image);
TensorImage hflip(const TensorImage& image);

// jitter, then one rotation per rotation_mode (AllFour draws uniformly
// here; use augment_expand for the exhaustive set), then hflip with
// flip_probability. Fully determined by the stream.
TensorImage augment(const TensorImage& image, const ColorPCA& pca,
                    const AugmentConfig& config, RandomStream& rng);

// AllFour: one jitter, all four rotations, independent flip draws.
// Other modes: a single augment() result.
std::vector<TensorImage> augment_expand(const TensorImage& image,
                                        const ColorPCA& pca,
                                        const AugmentConfig& config,
                                        RandomStream& rng);

// JSON document for the `stats` subcommand: fields mean, std, eigenvalues,
// eigenvectors (row-major), seed, target_width, target_height.
struct PipelineStats {
  NormalizationStats norm;
  ColorPCA pca;
  ConformTarget target;
  std::uint64_t seed = 0;
};

void save_pipeline_stats(const PipelineStats& stats,
                         const std::filesystem::path& path);
PipelineStats load_pipeline_stats(const std::filesystem::path& path);

}  // namespace polyp
