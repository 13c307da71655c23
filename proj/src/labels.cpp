#include "polyp/labels.hpp"

#include <algorithm>
#include <cctype>
#include <string>

#include "polyp/errors.hpp"

namespace polyp {

namespace {

constexpr std::array<std::string_view, kNumClasses> kCodes = {
    "HP", "SSP", "TSA", "TA", "TVV", "NORMAL",
};

constexpr std::array<std::string_view, kNumClasses> kNames = {
    "hyperplastic polyp",   "sessile serrated polyp",
    "traditional serrated adenoma", "tubular adenoma",
    "tubulovillous/villous adenoma", "normal",
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

}  // namespace

std::string_view label_code(ClassLabel c) { return kCodes[label_index(c)]; }

std::string_view label_name(ClassLabel c) { return kNames[label_index(c)]; }

ClassLabel parse_label(std::string_view text) {
  for (ClassLabel c : kAllLabels) {
    if (iequals(text, label_code(c)) || iequals(text, label_name(c))) {
      return c;
    }
  }
  throw UnknownLabelError(std::string(text));
}

}  // namespace polyp
