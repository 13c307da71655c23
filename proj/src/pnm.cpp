#include "polyp/pnm.hpp"

#include <cctype>
#include <cstdint>
#include <string>

#include "polyp/errors.hpp"
#include "polyp/io_util.hpp"

namespace polyp {

namespace {

constexpr std::int64_t kMaxDim = 1 << 20;  // 1M pixels per axis is plenty

// Reads the next header token, skipping whitespace and '#' comments.
std::int64_t next_header_int(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    char c = s[pos];
    if (c == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      ++pos;
    } else {
      break;
    }
  }
  if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) {
    throw CorruptImageError("malformed pixmap header");
  }
  std::int64_t value = 0;
  while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
    value = value * 10 + (s[pos] - '0');
    if (value > (std::int64_t{1} << 40)) {
      throw UnsupportedImageError("pixmap header value overflows");
    }
    ++pos;
  }
  return value;
}

}  // namespace

RasterImage decode_ppm(const std::string& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw UnsupportedImageError("not a binary portable pixmap (missing P6)");
  }
  std::size_t pos = 2;
  std::int64_t w = next_header_int(bytes, pos);
  std::int64_t h = next_header_int(bytes, pos);
  std::int64_t maxval = next_header_int(bytes, pos);
  if (w < 1 || h < 1 || w > kMaxDim || h > kMaxDim) {
    throw UnsupportedImageError("pixmap dimensions out of range: " +
                                std::to_string(w) + "x" + std::to_string(h));
  }
  if (maxval != 255) {
    throw UnsupportedImageError("pixmap maxval must be 255, got " +
                                std::to_string(maxval));
  }
  // Exactly one whitespace byte separates the header from the raster.
  if (pos >= bytes.size() ||
      !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw CorruptImageError("missing separator after pixmap header");
  }
  ++pos;
  std::size_t need = static_cast<std::size_t>(w) * h * kChannels;
  if (bytes.size() - pos < need) {
    throw CorruptImageError("pixmap body truncated: need " +
                            std::to_string(need) + " bytes, have " +
                            std::to_string(bytes.size() - pos));
  }
  RasterImage img;
  img.width = static_cast<int>(w);
  img.height = static_cast<int>(h);
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + need));
  return img;
}

std::string encode_ppm(const RasterImage& image) {
  std::string out = "P6\n" + std::to_string(image.width) + " " +
                    std::to_string(image.height) + "\n255\n";
  out.append(image.pixels.begin(), image.pixels.end());
  return out;
}

RasterImage read_image(const std::filesystem::path& path) {
  return decode_ppm(read_file(path));
}

void write_image(const RasterImage& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_ppm(image));
}

}  // namespace polyp
