#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "polyp/labels.hpp"

namespace polyp {

enum class SplitTag { Train, Validation, Test, Unassigned };

std::string_view split_tag_name(SplitTag tag);
SplitTag parse_split_tag(std::string_view text);  // throws ParseError-free; unknown -> throw

// One whole-slide image with its reference label.
struct SlideRecord {
  std::string id;
  std::string image_path;  // relative to the manifest's image root
  ClassLabel reference_label = ClassLabel::Normal;
  SplitTag split_tag = SplitTag::Unassigned;
};

// A pathologist-style crop: a rectangle inside a parent slide. Bounds are
// validated against the parent image when pixels are materialized.
struct CropRecord {
  std::string id;
  std::string parent_slide_id;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  ClassLabel reference_label = ClassLabel::Normal;
};

// Slide manifest: UTF-8 TSV, header `id\tpath\tlabel\tsplit`,
// '#'-prefixed comment lines ignored, order preserved.
std::vector<SlideRecord> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::vector<SlideRecord>& records,
                   const std::filesystem::path& path);

// Crop manifest: TSV, header `id\tparent\tx\ty\twidth\theight\tlabel`.
std::vector<CropRecord> load_crop_manifest(const std::filesystem::path& path);
void save_crop_manifest(const std::vector<CropRecord>& records,
                        const std::filesystem::path& path);

}  // namespace polyp
