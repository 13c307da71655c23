#pragma once

#include <cstdint>
#include <vector>

namespace polyp {

inline constexpr int kChannels = 3;  // every image in the pipeline is RGB

// 8-bit interleaved RGB, row-major. The universal pixel carrier.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // width * height * 3 bytes

  static RasterImage zeros(int w, int h) {
    RasterImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h * kChannels, 0);
    return img;
  }

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }

  bool same_size(const RasterImage& o) const {
    return width == o.width && height == o.height;
  }
};

// Real-valued counterpart, same interleaved layout. Holds normalized
// intensities; all values stay finite through every operation.
struct TensorImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // width * height * 3

  static TensorImage zeros(int w, int h) {
    TensorImage img;
    img.width = w;
    img.height = h;
    img.values.assign(static_cast<std::size_t>(w) * h * kChannels, 0.0);
    return img;
  }

  double& at(int x, int y, int c) {
    return values[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  double at(int x, int y, int c) const {
    return values[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
};

}  // namespace polyp
