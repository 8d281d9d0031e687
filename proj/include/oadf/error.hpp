#pragma once

#include <stdexcept>
#include <string>

namespace oadf {

// Caller-side problems: missing files, shape mismatches, invalid parameters.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Structurally invalid file contents, text or binary.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline FormatError parse_error(const std::string& path, std::size_t line, const std::string& msg) {
  return FormatError(path + ":" + std::to_string(line) + ": " + msg);
}

}  // namespace oadf
