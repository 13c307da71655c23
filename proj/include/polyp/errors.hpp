#pragma once

#include <stdexcept>
#include <string>

namespace polyp {

// Base class for all domain errors. The CLI maps these to exit code 1;
// anything else escaping to main is a bug.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class UnknownLabelError : public Error {
 public:
  explicit UnknownLabelError(const std::string& text)
      : Error("unknown class label: \"" + text + "\""), label_text(text) {}
  std::string label_text;
};

class DuplicateIdError : public Error {
 public:
  explicit DuplicateIdError(const std::string& id)
      : Error("duplicate record id: \"" + id + "\""), id(id) {}
  std::string id;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line)
      : Error(msg + " (line " + std::to_string(line) + ")"), line(line) {}
  int line;
};

class CorruptImageError : public Error {
 public:
  explicit CorruptImageError(const std::string& msg) : Error(msg) {}
};

class UnsupportedImageError : public Error {
 public:
  explicit UnsupportedImageError(const std::string& msg) : Error(msg) {}
};

class EmptyDatasetError : public Error {
 public:
  explicit EmptyDatasetError(const std::string& msg) : Error(msg) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& msg) : Error(msg) {}
};

class OutOfBoundsError : public Error {
 public:
  explicit OutOfBoundsError(const std::string& msg) : Error(msg) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class RangeError : public Error {
 public:
  explicit RangeError(const std::string& msg) : Error(msg) {}
};

class MissingPredictionError : public Error {
 public:
  explicit MissingPredictionError(const std::string& patch_id)
      : Error("no recorded prediction for patch \"" + patch_id + "\""),
        patch_id(patch_id) {}
  std::string patch_id;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace polyp
