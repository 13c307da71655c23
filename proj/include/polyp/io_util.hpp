#pragma once

#include <filesystem>
#include <string>

namespace polyp {

// Writes via a sibling temp file and renames into place, so readers never
// observe a torn file.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

std::string read_file(const std::filesystem::path& path);

}  // namespace polyp
