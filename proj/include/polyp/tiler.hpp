#pragma once

#include <utility>
#include <vector>

#include "polyp/image.hpp"
#include "polyp/manifest.hpp"
#include "polyp/rng.hpp"

namespace polyp {

// Geometry of the overlapping patch grid laid over a slide.
struct PatchSpec {
  int patch_width = 0;
  int patch_height = 0;
  double overlap_fraction = 1.0 / 3.0;  // lower bound on pairwise overlap

  // Floor keeps the realized overlap at or above the requested fraction.
  int stride_x() const {
    int s = static_cast<int>(patch_width * (1.0 - overlap_fraction));
    return s < 1 ? 1 : s;
  }
  int stride_y() const {
    int s = static_cast<int>(patch_height * (1.0 - overlap_fraction));
    return s < 1 ? 1 : s;
  }
};

// Top-left corner of a patch in slide coordinates.
struct PatchOrigin {
  int x = 0;
  int y = 0;
  friend bool operator==(PatchOrigin, PatchOrigin) = default;
};

// Working patch size: the element-wise lower median of crop dimensions
// over a random subset of ceil(n * subset_fraction) crops, sampled without
// replacement. Throws EmptyDatasetError when crops is empty.
std::pair<int, int> estimate_patch_size(const std::vector<CropRecord>& crops,
                                        double subset_fraction,
                                        RandomStream& rng);

// Patch origins covering every pixel of a width x height image.
//
// Per axis the origins are 0, s, 2s, ... for multiples not exceeding
// extent - patch, plus a final border-aligned origin at extent - patch if
// that multiple is missing. An image no larger than one patch gets the
// single origin 0. Output is the cross product, sorted by (y, x),
// duplicate-free.
std::vector<PatchOrigin> tile(int image_width, int image_height,
                              const PatchSpec& spec);

// Materializes one patch. Regions outside the source image are
// zero-filled; an origin whose rectangle misses the image entirely is an
// OutOfBoundsError.
RasterImage extract(const RasterImage& image, PatchOrigin origin,
                    const PatchSpec& spec);

}  // namespace polyp
