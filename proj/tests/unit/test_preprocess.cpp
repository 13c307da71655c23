#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "polyp/errors.hpp"
#include "polyp/preprocess.hpp"

using namespace polyp;

namespace {

RasterImage constant_image(int w, int h, std::uint8_t r, std::uint8_t g,
                           std::uint8_t b) {
  RasterImage img = RasterImage::zeros(w, h);
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = r;
    img.pixels[i + 1] = g;
    img.pixels[i + 2] = b;
  }
  return img;
}

RasterImage random_image(int w, int h, RandomStream& rng) {
  RasterImage img = RasterImage::zeros(w, h);
  for (auto& px : img.pixels) px = static_cast<std::uint8_t>(rng.next_below(256));
  return img;
}

TensorImage random_tensor(int w, int h, RandomStream& rng) {
  TensorImage img = TensorImage::zeros(w, h);
  for (auto& v : img.values) v = rng.next_double() * 4.0 - 2.0;
  return img;
}

std::multiset<double> value_multiset(const TensorImage& img) {
  return {img.values.begin(), img.values.end()};
}

}  // namespace

TEST_CASE("conform target is the element-wise lower median") {
  RandomStream rng(1);
  ConformTarget t =
      compute_conform_target({{100, 80}, {120, 90}, {110, 85}}, 1.0, rng);
  CHECK(t.width == 110);
  CHECK(t.height == 85);

  ConformTarget same = compute_conform_target({{50, 50}, {50, 50}}, 1.0, rng);
  CHECK(same.width == 50);
  CHECK(same.height == 50);
}

TEST_CASE("conform target is seed-deterministic") {
  std::vector<std::pair<int, int>> dims;
  RandomStream gen(9);
  for (int i = 0; i < 40; ++i) {
    dims.emplace_back(static_cast<int>(gen.next_below(100)) + 1,
                      static_cast<int>(gen.next_below(100)) + 1);
  }
  RandomStream a(42), b(42);
  ConformTarget ta = compute_conform_target(dims, 0.15, a);
  ConformTarget tb = compute_conform_target(dims, 0.15, b);
  CHECK(ta.width == tb.width);
  CHECK(ta.height == tb.height);
}

TEST_CASE("conform_size leaves an exact fit unchanged") {
  RandomStream rng(3);
  RasterImage img = random_image(110, 85, rng);
  RasterImage out = conform_size(img, {110, 85});
  CHECK(out.pixels == img.pixels);
}

TEST_CASE("conform_size pads a small image at the top-left") {
  RandomStream rng(4);
  RasterImage img = random_image(55, 40, rng);
  RasterImage out = conform_size(img, {110, 85});
  REQUIRE(out.width == 110);
  REQUIRE(out.height == 85);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 55; ++x) {
      for (int c = 0; c < 3; ++c) CHECK(out.at(x, y, c) == img.at(x, y, c));
    }
  }
  CHECK(out.at(55, 0, 0) == 0);
  CHECK(out.at(0, 40, 1) == 0);
  CHECK(out.at(109, 84, 2) == 0);
}

TEST_CASE("conform_size downscales uniformly with no padding at ratio fit") {
  RasterImage img = constant_image(220, 170, 90, 120, 150);
  RasterImage out = conform_size(img, {110, 85});
  REQUIRE(out.width == 110);
  REQUIRE(out.height == 85);
  // Scale factor exactly 0.5 on both axes: content fills the target, and
  // a constant image stays constant under bilinear averaging.
  for (std::size_t i = 0; i < out.pixels.size(); i += 3) {
    CHECK(out.pixels[i] == 90);
    CHECK(out.pixels[i + 1] == 120);
    CHECK(out.pixels[i + 2] == 150);
  }
}

TEST_CASE("compute_stats of one constant image") {
  std::vector<RasterImage> imgs{constant_image(8, 8, 100, 150, 200)};
  NormalizationStats stats = compute_stats(imgs);
  CHECK(stats.mean[0] == doctest::Approx(100));
  CHECK(stats.mean[1] == doctest::Approx(150));
  CHECK(stats.mean[2] == doctest::Approx(200));
  for (double s : stats.stddev) CHECK(s == doctest::Approx(0.0));
}

TEST_CASE("compute_stats two-point population std is half the range") {
  std::vector<RasterImage> imgs{constant_image(1, 1, 0, 0, 0),
                                constant_image(1, 1, 200, 100, 50)};
  NormalizationStats stats = compute_stats(imgs);
  CHECK(stats.mean[0] == doctest::Approx(100));
  CHECK(stats.mean[1] == doctest::Approx(50));
  CHECK(stats.mean[2] == doctest::Approx(25));
  CHECK(stats.stddev[0] == doctest::Approx(100));
  CHECK(stats.stddev[1] == doctest::Approx(50));
  CHECK(stats.stddev[2] == doctest::Approx(25));
}

TEST_CASE("compute_stats is invariant under duplication") {
  RandomStream rng(5);
  RasterImage img = random_image(13, 9, rng);
  std::vector<RasterImage> once{img};
  std::vector<RasterImage> twice{img, img};
  NormalizationStats a = compute_stats(once);
  NormalizationStats b = compute_stats(twice);
  for (int c = 0; c < 3; ++c) {
    CHECK(a.mean[c] == doctest::Approx(b.mean[c]).epsilon(1e-12));
    CHECK(a.stddev[c] == doctest::Approx(b.stddev[c]).epsilon(1e-12));
  }
}

TEST_CASE("compute_stats rejects an empty set") {
  std::vector<RasterImage> empty;
  CHECK_THROWS_AS(compute_stats(empty), EmptyDatasetError);
}

TEST_CASE("normalize centers and scales") {
  NormalizationStats stats{{127.5, 127.5, 127.5}, {63.75, 63.75, 63.75}};
  RasterImage img = constant_image(2, 2, 255, 255, 255);
  TensorImage t = normalize(img, stats);
  for (double v : t.values) CHECK(v == doctest::Approx(2.0));

  RasterImage at_mean = constant_image(2, 2, 127, 127, 127);
  NormalizationStats exact{{127, 127, 127}, {10, 10, 10}};
  TensorImage zero = normalize(at_mean, exact);
  for (double v : zero.values) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("normalize survives a zero-std channel") {
  NormalizationStats stats{{10, 10, 10}, {0, 0, 0}};
  RasterImage img = constant_image(2, 2, 11, 11, 11);
  TensorImage t = normalize(img, stats);
  for (double v : t.values) {
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(1.0 / kStdEpsilon));
  }
}

TEST_CASE("normalize then denormalize recovers the pixel values") {
  RandomStream rng(6);
  RasterImage img = random_image(10, 7, rng);
  std::vector<RasterImage> set{img};
  NormalizationStats stats = compute_stats(set);
  for (double& s : stats.stddev) s = std::max(s, 1.0);  // keep std > eps
  TensorImage t = normalize(img, stats);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double back = t.at(x, y, c) * stats.stddev[c] + stats.mean[c];
        CHECK(back == doctest::Approx(img.at(x, y, c)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("fit_color_pca on identical pixels has zero eigenvalues") {
  std::vector<RasterImage> imgs{constant_image(4, 4, 80, 90, 100)};
  ColorPCA pca = fit_color_pca(imgs);
  for (double ev : pca.eigenvalues) CHECK(ev == doctest::Approx(0.0));
}

TEST_CASE("fit_color_pca recovers a single-channel direction") {
  // Red varies over {0, 255}, green/blue fixed: leading eigenvector is
  // +-(1,0,0) with eigenvalue equal to the red variance on [0,1].
  RasterImage img = RasterImage::zeros(2, 1);
  img.at(0, 0, 0) = 0;
  img.at(1, 0, 0) = 255;
  img.at(0, 0, 1) = img.at(1, 0, 1) = 70;
  img.at(0, 0, 2) = img.at(1, 0, 2) = 90;
  std::vector<RasterImage> imgs{img};
  ColorPCA pca = fit_color_pca(imgs);
  CHECK(pca.eigenvalues[0] == doctest::Approx(0.25));  // var of {0,1}
  CHECK(std::abs(pca.eigenvectors[0][0]) == doctest::Approx(1.0));
  CHECK(pca.eigenvectors[1][0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pca.eigenvectors[2][0] == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(pca.eigenvalues[1] == doctest::Approx(0.0));
  CHECK(pca.eigenvalues[2] == doctest::Approx(0.0));
}

TEST_CASE("fit_color_pca eigenvectors reconstruct the covariance") {
  RandomStream rng(8);
  std::vector<RasterImage> imgs{random_image(16, 16, rng),
                                random_image(12, 20, rng)};
  ColorPCA pca = fit_color_pca(imgs);

  // Recompute the covariance directly as the oracle.
  double n = 0;
  std::array<double, 3> mean{};
  std::array<std::array<double, 3>, 3> cov{};
  for (const auto& img : imgs) {
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
      for (int c = 0; c < 3; ++c) mean[c] += img.pixels[i + c] / 255.0;
      n += 1;
    }
  }
  for (double& m : mean) m /= n;
  for (const auto& img : imgs) {
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
      std::array<double, 3> d;
      for (int c = 0; c < 3; ++c) d[c] = img.pixels[i + c] / 255.0 - mean[c];
      for (int a = 0; a < 3; ++a) {
        for (int b = 0; b < 3; ++b) cov[a][b] += d[a] * d[b] / n;
      }
    }
  }

  // V diag(lambda) V^T == cov within 1e-8, and V^T V == I within 1e-6.
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      double rebuilt = 0.0;
      for (int k = 0; k < 3; ++k) {
        rebuilt += pca.eigenvectors[a][k] * pca.eigenvalues[k] *
                   pca.eigenvectors[b][k];
      }
      CHECK(std::abs(rebuilt - cov[a][b]) < 1e-8);
      double dot = 0.0;
      for (int k = 0; k < 3; ++k) {
        dot += pca.eigenvectors[k][a] * pca.eigenvectors[k][b];
      }
      CHECK(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-6);
    }
  }
  CHECK(pca.eigenvalues[0] >= pca.eigenvalues[1]);
  CHECK(pca.eigenvalues[1] >= pca.eigenvalues[2]);
}

TEST_CASE("fit_color_pca needs at least two pixels") {
  std::vector<RasterImage> one{constant_image(1, 1, 5, 5, 5)};
  CHECK_THROWS_AS(fit_color_pca(one), InsufficientDataError);
}

TEST_CASE("jitter with sigma zero is the identity") {
  RandomStream rng(10);
  TensorImage img = random_tensor(6, 5, rng);
  ColorPCA pca;
  pca.eigenvalues = {0.5, 0.3, 0.1};
  pca.eigenvectors = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  RandomStream jrng(11);
  TensorImage out = jitter(img, pca, jrng, 0.0);
  CHECK(out.values == img.values);
}

TEST_CASE("jitter with zero eigenvalues is the identity") {
  RandomStream rng(12);
  TensorImage img = random_tensor(6, 5, rng);
  ColorPCA pca;  // all eigenvalues zero
  pca.eigenvectors = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  RandomStream jrng(13);
  TensorImage out = jitter(img, pca, jrng, 2.5);
  CHECK(out.values == img.values);
}

TEST_CASE("jitter adds the same offset to every pixel") {
  RandomStream rng(14);
  TensorImage img = random_tensor(9, 4, rng);
  ColorPCA pca;
  pca.eigenvalues = {0.6, 0.2, 0.05};
  // A rotation keeps things orthonormal.
  double s = std::sqrt(0.5);
  pca.eigenvectors = {{{s, -s, 0}, {s, s, 0}, {0, 0, 1}}};
  RandomStream jrng(15);
  TensorImage out = jitter(img, pca, jrng, 0.3);

  std::array<double, 3> offset;
  for (int c = 0; c < 3; ++c) offset[c] = out.at(0, 0, c) - img.at(0, 0, c);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        CHECK(out.at(x, y, c) - img.at(x, y, c) ==
              doctest::Approx(offset[c]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("four quarter turns are the identity") {
  RandomStream rng(16);
  RasterImage img = random_image(7, 5, rng);
  RasterImage out = rotate90(rotate90(rotate90(rotate90(img, 1), 1), 1), 1);
  CHECK(out.pixels == img.pixels);
  RasterImage direct = rotate90(img, 0);
  CHECK(direct.pixels == img.pixels);
}

TEST_CASE("odd rotations swap dimensions") {
  RasterImage img = RasterImage::zeros(7, 5);
  RasterImage r1 = rotate90(img, 1);
  CHECK(r1.width == 5);
  CHECK(r1.height == 7);
  RasterImage r2 = rotate90(img, 2);
  CHECK(r2.width == 7);
  CHECK(r2.height == 5);
}

TEST_CASE("hflip is an involution and mirrors a 2x1 image") {
  RasterImage img = RasterImage::zeros(2, 1);
  img.at(0, 0, 0) = 10;  // A
  img.at(1, 0, 0) = 20;  // B
  RasterImage flipped = hflip(img);
  CHECK(flipped.at(0, 0, 0) == 20);
  CHECK(flipped.at(1, 0, 0) == 10);
  CHECK(hflip(flipped).pixels == img.pixels);
}

TEST_CASE("rotations and flips preserve the pixel multiset") {
  RandomStream rng(17);
  TensorImage img = random_tensor(6, 9, rng);
  auto original = value_multiset(img);
  CHECK(value_multiset(rotate90(img, 1)) == original);
  CHECK(value_multiset(rotate90(img, 3)) == original);
  CHECK(value_multiset(hflip(img)) == original);
}

TEST_CASE("augment with everything off is the identity") {
  RandomStream rng(18);
  TensorImage img = random_tensor(8, 8, rng);
  ColorPCA pca;
  pca.eigenvectors = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  AugmentConfig config;
  config.jitter_sigma = 0.0;
  config.flip_probability = 0.0;
  config.rotation_mode = RotationMode::None;
  RandomStream arng(19);
  TensorImage out = augment(img, pca, config, arng);
  CHECK(out.values == img.values);
}

TEST_CASE("augment is seed-deterministic") {
  RandomStream rng(20);
  TensorImage img = random_tensor(8, 8, rng);
  ColorPCA pca;
  pca.eigenvalues = {0.4, 0.2, 0.1};
  pca.eigenvectors = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  AugmentConfig config;
  RandomStream a(77), b(77);
  TensorImage out_a = augment(img, pca, config, a);
  TensorImage out_b = augment(img, pca, config, b);
  CHECK(out_a.values == out_b.values);
  CHECK(out_a.width == out_b.width);
}

TEST_CASE("augment with sigma zero preserves the pixel multiset") {
  RandomStream rng(21);
  TensorImage img = random_tensor(8, 8, rng);
  ColorPCA pca;
  pca.eigenvectors = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  AugmentConfig config;
  config.jitter_sigma = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomStream arng(seed);
    CHECK(value_multiset(augment(img, pca, config, arng)) ==
          value_multiset(img));
  }
}

TEST_CASE("flips happen at the configured frequency") {
  // 10000 augments at p=0.5: the flip count stays within 3 sigma of 5000.
  TensorImage img = TensorImage::zeros(2, 1);
  img.at(0, 0, 0) = 1.0;  // asymmetric so a flip is observable
  ColorPCA pca;
  pca.eigenvectors = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  AugmentConfig config;
  config.jitter_sigma = 0.0;
  config.rotation_mode = RotationMode::None;
  RandomStream rng(314159);
  int flips = 0;
  for (int i = 0; i < 10000; ++i) {
    TensorImage out = augment(img, pca, config, rng);
    if (out.at(1, 0, 0) == 1.0) ++flips;
  }
  CHECK(flips > 5000 - 150);
  CHECK(flips < 5000 + 150);
}

TEST_CASE("augment_expand in all_four mode emits all rotations") {
  RandomStream rng(22);
  TensorImage img = random_tensor(5, 5, rng);
  ColorPCA pca;
  pca.eigenvectors = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  AugmentConfig config;
  config.jitter_sigma = 0.0;
  config.flip_probability = 0.0;
  config.rotation_mode = RotationMode::AllFour;
  RandomStream arng(23);
  auto variants = augment_expand(img, pca, config, arng);
  REQUIRE(variants.size() == 4);
  CHECK(variants[0].values == img.values);
  CHECK(variants[1].values == rotate90(img, 1).values);
  CHECK(variants[2].values == rotate90(img, 2).values);
  CHECK(variants[3].values == rotate90(img, 3).values);
}

TEST_CASE("pipeline stats JSON round-trips") {
  PipelineStats stats;
  stats.norm.mean = {1.5, 2.5, 3.5};
  stats.norm.stddev = {4.5, 5.5, 6.5};
  stats.pca.eigenvalues = {0.3, 0.2, 0.1};
  stats.pca.eigenvectors = {{{1, 0, 0}, {0, 0, -1}, {0, 1, 0}}};
  stats.target = {48, 32};
  stats.seed = 987654321;

  auto path = std::filesystem::temp_directory_path() / "polyp_stats_test.json";
  save_pipeline_stats(stats, path);
  PipelineStats back = load_pipeline_stats(path);
  CHECK(back.norm.mean == stats.norm.mean);
  CHECK(back.norm.stddev == stats.norm.stddev);
  CHECK(back.pca.eigenvalues == stats.pca.eigenvalues);
  CHECK(back.pca.eigenvectors == stats.pca.eigenvectors);
  CHECK(back.target.width == 48);
  CHECK(back.target.height == 32);
  CHECK(back.seed == 987654321);
}
