#include "polyp/manifest.hpp"

#include <charconv>
#include <sstream>
#include <unordered_set>

#include "polyp/errors.hpp"
#include "polyp/io_util.hpp"

namespace polyp {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

int parse_int_field(const std::string& s, const char* what, int line_no) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(std::string("bad ") + what + " field \"" + s + "\"",
                     line_no);
  }
  return value;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

// Yields (line_number, fields) for each non-comment, non-blank data line,
// after checking the header.
template <typename Fn>
void for_each_row(const std::filesystem::path& path,
                  std::size_t expected_fields, const char* header_first,
                  Fn&& fn) {
  std::istringstream in(read_file(path));
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_tabs(line);
    if (!header_seen) {
      header_seen = true;
      if (!fields.empty() && fields[0] == header_first) continue;  // header
      // Headerless files are accepted; fall through to data parsing.
    }
    if (fields.size() != expected_fields) {
      throw ParseError("expected " + std::to_string(expected_fields) +
                           " tab-separated fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    fn(line_no, fields);
  }
}

}  // namespace

std::string_view split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::Train: return "train";
    case SplitTag::Validation: return "validation";
    case SplitTag::Test: return "test";
    case SplitTag::Unassigned: return "unassigned";
  }
  return "unassigned";
}

SplitTag parse_split_tag(std::string_view text) {
  if (text == "train") return SplitTag::Train;
  if (text == "validation") return SplitTag::Validation;
  if (text == "test") return SplitTag::Test;
  if (text == "unassigned" || text.empty()) return SplitTag::Unassigned;
  throw Error("unknown split tag: \"" + std::string(text) + "\"");
}

std::vector<SlideRecord> load_manifest(const std::filesystem::path& path) {
  std::vector<SlideRecord> records;
  std::unordered_set<std::string> seen;
  for_each_row(path, 4, "id", [&](int line_no, const auto& f) {
    SlideRecord rec;
    rec.id = f[0];
    rec.image_path = f[1];
    if (rec.id.empty() || rec.image_path.empty()) {
      throw ParseError("empty id or path", line_no);
    }
    try {
      rec.reference_label = parse_label(f[2]);
      rec.split_tag = parse_split_tag(f[3]);
    } catch (const UnknownLabelError&) {
      throw;
    }
    if (!seen.insert(rec.id).second) throw DuplicateIdError(rec.id);
    records.push_back(std::move(rec));
  });
  return records;
}

void save_manifest(const std::vector<SlideRecord>& records,
                   const std::filesystem::path& path) {
  std::string out = "id\tpath\tlabel\tsplit\n";
  for (const auto& r : records) {
    out += r.id;
    out += '\t';
    out += r.image_path;
    out += '\t';
    out += label_code(r.reference_label);
    out += '\t';
    out += split_tag_name(r.split_tag);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<CropRecord> load_crop_manifest(const std::filesystem::path& path) {
  std::vector<CropRecord> records;
  std::unordered_set<std::string> seen;
  for_each_row(path, 7, "id", [&](int line_no, const auto& f) {
    CropRecord rec;
    rec.id = f[0];
    rec.parent_slide_id = f[1];
    rec.x = parse_int_field(f[2], "x", line_no);
    rec.y = parse_int_field(f[3], "y", line_no);
    rec.width = parse_int_field(f[4], "width", line_no);
    rec.height = parse_int_field(f[5], "height", line_no);
    rec.reference_label = parse_label(f[6]);
    if (rec.id.empty()) throw ParseError("empty id", line_no);
    if (rec.width < 1 || rec.height < 1 || rec.x < 0 || rec.y < 0) {
      throw ParseError("crop bounds must have x,y >= 0 and width,height >= 1",
                       line_no);
    }
    if (!seen.insert(rec.id).second) throw DuplicateIdError(rec.id);
    records.push_back(std::move(rec));
  });
  return records;
}

void save_crop_manifest(const std::vector<CropRecord>& records,
                        const std::filesystem::path& path) {
  std::string out = "id\tparent\tx\ty\twidth\theight\tlabel\n";
  for (const auto& r : records) {
    out += r.id;
    out += '\t';
    out += r.parent_slide_id;
    out += '\t';
    out += std::to_string(r.x);
    out += '\t';
    out += std::to_string(r.y);
    out += '\t';
    out += std::to_string(r.width);
    out += '\t';
    out += std::to_string(r.height);
    out += '\t';
    out += label_code(r.reference_label);
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace polyp
