#pragma once

#include <stdexcept>
#include <string>

namespace avdeploy {

/// Malformed input data (CSV rows, headers, field values). Messages carry the
/// source line number and offending field where applicable.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem-level failures; the message always names the path.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace avdeploy
