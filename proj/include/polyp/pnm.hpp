#pragma once

#include <filesystem>

#include "polyp/image.hpp"

namespace polyp {

// Binary portable pixmap (magic "P6", maxval 255) is the interchange
// format: ASCII header, then raw RGB triples. Write-then-read returns a
// bit-identical pixel buffer.
//
// Errors: truncated body or bad header -> CorruptImageError; unsupported
// magic/maxval or absurd dimensions -> UnsupportedImageError.
RasterImage read_image(const std::filesystem::path& path);
void write_image(const RasterImage& image, const std::filesystem::path& path);

// Same codecs over in-memory buffers (used by the file functions).
RasterImage decode_ppm(const std::string& bytes);
std::string encode_ppm(const RasterImage& image);

}  // namespace polyp
