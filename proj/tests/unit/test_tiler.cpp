#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "polyp/errors.hpp"
#include "polyp/tiler.hpp"

using namespace polyp;

namespace {

std::vector<CropRecord> crops_with_dims(
    const std::vector<std::pair<int, int>>& dims) {
  std::vector<CropRecord> crops;
  int i = 0;
  for (auto [w, h] : dims) {
    crops.push_back({"c" + std::to_string(i++), "s", 0, 0, w, h,
                     ClassLabel::TA});
  }
  return crops;
}

// Brute-force per-pixel coverage check.
bool fully_covered(int w, int h, const std::vector<PatchOrigin>& origins,
                   const PatchSpec& spec) {
  std::vector<char> covered(static_cast<std::size_t>(w) * h, 0);
  for (auto o : origins) {
    for (int y = o.y; y < std::min(h, o.y + spec.patch_height); ++y) {
      for (int x = o.x; x < std::min(w, o.x + spec.patch_width); ++x) {
        covered[static_cast<std::size_t>(y) * w + x] = 1;
      }
    }
  }
  return std::all_of(covered.begin(), covered.end(),
                     [](char c) { return c == 1; });
}

}  // namespace

TEST_CASE("estimate_patch_size takes the element-wise median") {
  auto crops = crops_with_dims({{100, 80}, {120, 90}, {110, 85}});
  RandomStream rng(1);
  auto [w, h] = estimate_patch_size(crops, 1.0, rng);
  CHECK(w == 110);
  CHECK(h == 85);
}

TEST_CASE("a single crop is its own median at any fraction") {
  auto crops = crops_with_dims({{64, 64}});
  RandomStream rng(1);
  auto [w, h] = estimate_patch_size(crops, 0.15, rng);
  CHECK(w == 64);
  CHECK(h == 64);
}

TEST_CASE("even-length lists take the lower median") {
  auto crops = crops_with_dims({{10, 10}, {20, 20}, {30, 30}, {40, 40}});
  RandomStream rng(1);
  auto [w, h] = estimate_patch_size(crops, 1.0, rng);
  CHECK(w == 20);
  CHECK(h == 20);
}

TEST_CASE("estimate_patch_size rejects an empty crop list") {
  std::vector<CropRecord> empty;
  RandomStream rng(1);
  CHECK_THROWS_AS(estimate_patch_size(empty, 0.15, rng), EmptyDatasetError);
}

TEST_CASE("100x100 with 60-patch and third overlap yields 4 patches") {
  PatchSpec spec{60, 60, 1.0 / 3.0};
  CHECK(spec.stride_x() == 40);
  auto origins = tile(100, 100, spec);
  REQUIRE(origins.size() == 4);
  CHECK(origins[0] == PatchOrigin{0, 0});
  CHECK(origins[1] == PatchOrigin{40, 0});
  CHECK(origins[2] == PatchOrigin{0, 40});
  CHECK(origins[3] == PatchOrigin{40, 40});
}

TEST_CASE("exact fit gives exactly one origin") {
  auto origins = tile(60, 60, {60, 60, 1.0 / 3.0});
  REQUIRE(origins.size() == 1);
  CHECK(origins[0] == PatchOrigin{0, 0});
}

TEST_CASE("140x60 with 60-patch covers x with {0,40,80}") {
  auto origins = tile(140, 60, {60, 60, 1.0 / 3.0});
  REQUIRE(origins.size() == 3);
  CHECK(origins[0] == PatchOrigin{0, 0});
  CHECK(origins[1] == PatchOrigin{40, 0});
  CHECK(origins[2] == PatchOrigin{80, 0});
}

TEST_CASE("tiling properties hold over randomized instances") {
  RandomStream rng(2718);
  for (int trial = 0; trial < 120; ++trial) {
    int w = static_cast<int>(rng.next_below(200)) + 1;
    int h = static_cast<int>(rng.next_below(200)) + 1;
    int pw = static_cast<int>(rng.next_below(64)) + 1;
    int ph = static_cast<int>(rng.next_below(64)) + 1;
    double overlap = rng.next_double() * 0.8;
    PatchSpec spec{pw, ph, overlap};
    auto origins = tile(w, h, spec);

    REQUIRE(!origins.empty());
    CHECK(fully_covered(w, h, origins, spec));

    // Sorted by (y, x) and duplicate-free.
    auto sorted = origins;
    std::sort(sorted.begin(), sorted.end(), [](PatchOrigin a, PatchOrigin b) {
      return a.y != b.y ? a.y < b.y : a.x < b.x;
    });
    CHECK(std::equal(origins.begin(), origins.end(), sorted.begin(),
                     [](PatchOrigin a, PatchOrigin b) { return a == b; }));
    std::set<std::pair<int, int>> unique;
    for (auto o : origins) unique.insert({o.x, o.y});
    CHECK(unique.size() == origins.size());

    // Adjacent x-origins never drift further apart than the stride bound.
    std::set<int> xs;
    for (auto o : origins) xs.insert(o.x);
    int prev = -1;
    for (int x : xs) {
      if (prev >= 0) CHECK(x - prev <= pw * (1.0 - overlap) + 1);
      prev = x;
    }
  }
}

TEST_CASE("enlarging the image preserves non-final origins") {
  PatchSpec spec{50, 50, 1.0 / 3.0};
  auto before = tile(170, 50, spec);
  auto after = tile(230, 50, spec);
  std::set<int> after_xs;
  for (auto o : after) after_xs.insert(o.x);
  // All origins except the appended border one survive.
  int final_x = 170 - 50;
  for (auto o : before) {
    if (o.x != final_x) CHECK(after_xs.count(o.x) == 1);
  }
}

TEST_CASE("extract copies an aligned patch exactly") {
  PatchSpec spec{4, 4, 1.0 / 3.0};
  RasterImage img = RasterImage::zeros(4, 4);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    img.pixels[i] = static_cast<std::uint8_t>(i);
  }
  RasterImage patch = extract(img, {0, 0}, spec);
  CHECK(patch.pixels == img.pixels);
}

TEST_CASE("extract zero-fills beyond the image border") {
  PatchSpec spec{60, 60, 1.0 / 3.0};
  RasterImage img = RasterImage::zeros(50, 50);
  for (auto& px : img.pixels) px = 200;
  RasterImage patch = extract(img, {0, 0}, spec);
  REQUIRE(patch.width == 60);
  REQUIRE(patch.height == 60);
  CHECK(patch.at(49, 49, 0) == 200);
  CHECK(patch.at(50, 0, 0) == 0);  // rightmost 10 columns zero
  CHECK(patch.at(0, 50, 0) == 0);  // bottom 10 rows zero
  CHECK(patch.at(59, 59, 2) == 0);
}

TEST_CASE("extract at the far corner needs no padding") {
  PatchSpec spec{60, 60, 1.0 / 3.0};
  RasterImage img = RasterImage::zeros(100, 100);
  img.at(99, 99, 1) = 77;
  RasterImage patch = extract(img, {40, 40}, spec);
  CHECK(patch.at(59, 59, 1) == 77);
}

TEST_CASE("an origin outside the image is out of bounds") {
  PatchSpec spec{10, 10, 0.0};
  RasterImage img = RasterImage::zeros(8, 8);
  CHECK_THROWS_AS(extract(img, {8, 0}, spec), OutOfBoundsError);
  CHECK_THROWS_AS(extract(img, {0, 100}, spec), OutOfBoundsError);
}
