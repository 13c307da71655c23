#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace polyp {

// The six slide/patch categories. The enum order is the canonical order
// used for serialization and tie-breaking everywhere.
enum class ClassLabel : int {
  HP = 0,      // hyperplastic polyp
  SSP = 1,     // sessile serrated polyp
  TSA = 2,     // traditional serrated adenoma
  TA = 3,      // tubular adenoma
  TVV = 4,     // tubulovillous/villous adenoma
  Normal = 5,  // no polyp
};

inline constexpr int kNumClasses = 6;

inline constexpr std::array<ClassLabel, kNumClasses> kAllLabels = {
    ClassLabel::HP,  ClassLabel::SSP, ClassLabel::TSA,
    ClassLabel::TA,  ClassLabel::TVV, ClassLabel::Normal,
};

constexpr int label_index(ClassLabel c) { return static_cast<int>(c); }

std::string_view label_code(ClassLabel c);  // "HP", "SSP", ..., "NORMAL"
std::string_view label_name(ClassLabel c);  // "hyperplastic polyp", ...

// Matches a code or display name, case-insensitively.
// Throws UnknownLabelError for anything else.
ClassLabel parse_label(std::string_view text);

}  // namespace polyp
