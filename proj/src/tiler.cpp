#include "polyp/tiler.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "polyp/errors.hpp"

namespace polyp {

namespace {

// Lower median: an actually-occurring value for even-length lists too.
int lower_median(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

std::vector<int> axis_origins(int extent, int patch, int stride) {
  std::vector<int> origins;
  if (extent <= patch) {
    origins.push_back(0);
    return origins;
  }
  int last = extent - patch;
  for (int o = 0; o <= last; o += stride) origins.push_back(o);
  if (origins.back() != last) origins.push_back(last);
  return origins;
}

}  // namespace

std::pair<int, int> estimate_patch_size(const std::vector<CropRecord>& crops,
                                        double subset_fraction,
                                        RandomStream& rng) {
  if (crops.empty()) throw EmptyDatasetError("estimate_patch_size: no crops");
  if (!(subset_fraction > 0.0 && subset_fraction <= 1.0)) {
    throw RangeError("subset_fraction must be in (0, 1]");
  }
  auto count = static_cast<std::size_t>(
      std::ceil(static_cast<double>(crops.size()) * subset_fraction));
  auto picks = rng.sample_without_replacement(crops.size(), count);
  std::vector<int> widths, heights;
  widths.reserve(picks.size());
  heights.reserve(picks.size());
  for (std::size_t i : picks) {
    widths.push_back(crops[i].width);
    heights.push_back(crops[i].height);
  }
  return {lower_median(std::move(widths)), lower_median(std::move(heights))};
}

std::vector<PatchOrigin> tile(int image_width, int image_height,
                              const PatchSpec& spec) {
  auto xs = axis_origins(image_width, spec.patch_width, spec.stride_x());
  auto ys = axis_origins(image_height, spec.patch_height, spec.stride_y());
  std::vector<PatchOrigin> origins;
  origins.reserve(xs.size() * ys.size());
  for (int y : ys) {
    for (int x : xs) origins.push_back({x, y});
  }
  return origins;
}

RasterImage extract(const RasterImage& image, PatchOrigin origin,
                    const PatchSpec& spec) {
  if (origin.x >= image.width || origin.y >= image.height || origin.x < 0 ||
      origin.y < 0) {
    throw OutOfBoundsError("patch origin (" + std::to_string(origin.x) + "," +
                           std::to_string(origin.y) + ") outside " +
                           std::to_string(image.width) + "x" +
                           std::to_string(image.height) + " image");
  }
  RasterImage patch = RasterImage::zeros(spec.patch_width, spec.patch_height);
  int copy_w = std::min(spec.patch_width, image.width - origin.x);
  int copy_h = std::min(spec.patch_height, image.height - origin.y);
  for (int y = 0; y < copy_h; ++y) {
    const std::uint8_t* src = &image.pixels[(static_cast<std::size_t>(
                                                 origin.y + y) * image.width +
                                             origin.x) *
                                            kChannels];
    std::uint8_t* dst =
        &patch.pixels[static_cast<std::size_t>(y) * spec.patch_width *
                      kChannels];
    std::memcpy(dst, src, static_cast<std::size_t>(copy_w) * kChannels);
  }
  return patch;
}

}  // namespace polyp
