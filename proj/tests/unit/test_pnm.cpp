#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "polyp/errors.hpp"
#include "polyp/pnm.hpp"
#include "polyp/rng.hpp"

using namespace polyp;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  fs::path dir = fs::temp_directory_path() / "polyp_pnm_tests";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("2x2 image round-trips bit-exactly") {
  RasterImage img = RasterImage::zeros(2, 2);
  std::uint8_t data[] = {0, 0, 0, 255, 255, 255, 10, 20, 30, 40, 50, 60};
  std::copy(std::begin(data), std::end(data), img.pixels.begin());

  fs::path path = temp_dir() / "roundtrip.ppm";
  write_image(img, path);
  RasterImage back = read_image(path);
  CHECK(back.width == 2);
  CHECK(back.height == 2);
  CHECK(back.pixels == img.pixels);
}

TEST_CASE("1x1 all-zero image is valid") {
  fs::path path = temp_dir() / "tiny.ppm";
  write_image(RasterImage::zeros(1, 1), path);
  RasterImage back = read_image(path);
  CHECK(back.width == 1);
  CHECK(back.height == 1);
  CHECK(back.pixels == std::vector<std::uint8_t>{0, 0, 0});
}

TEST_CASE("truncated body is a corrupt image") {
  // Header says 2x2 = 4 pixels; body carries 3.
  std::string bytes = "P6\n2 2\n255\n";
  bytes.append(9, '\x7f');
  CHECK_THROWS_AS(decode_ppm(bytes), CorruptImageError);
}

TEST_CASE("header problems are rejected") {
  CHECK_THROWS_AS(decode_ppm("P5\n1 1\n255\nxxx"), UnsupportedImageError);
  CHECK_THROWS_AS(decode_ppm("P6\n1 1\n65535\n..."), UnsupportedImageError);
  CHECK_THROWS_AS(decode_ppm("P6\n0 4\n255\n"), UnsupportedImageError);
  CHECK_THROWS_AS(decode_ppm("P6\n1 \n"), CorruptImageError);
}

TEST_CASE("comments in the header are skipped") {
  std::string bytes = "P6\n# a comment\n1 1\n# another\n255\n";
  bytes += '\xAA';
  bytes += '\xBB';
  bytes += '\xCC';
  RasterImage img = decode_ppm(bytes);
  CHECK(img.pixels == std::vector<std::uint8_t>{0xAA, 0xBB, 0xCC});
}

TEST_CASE("random images round-trip for all dimensions up to 64") {
  RandomStream rng(321);
  for (int trial = 0; trial < 60; ++trial) {
    int w = static_cast<int>(rng.next_below(64)) + 1;
    int h = static_cast<int>(rng.next_below(64)) + 1;
    RasterImage img = RasterImage::zeros(w, h);
    for (auto& px : img.pixels) {
      px = static_cast<std::uint8_t>(rng.next_below(256));
    }
    RasterImage back = decode_ppm(encode_ppm(img));
    REQUIRE(back.width == w);
    REQUIRE(back.height == h);
    REQUIRE(back.pixels == img.pixels);
  }
}
