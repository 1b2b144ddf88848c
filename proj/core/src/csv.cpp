#include "avdeploy/csv.hpp"

#include <charconv>
#include <cmath>

#include <fmt/format.h>

#include "avdeploy/errors.hpp"

namespace avdeploy::csv {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

void trim_cr(std::string& line) {
  if (!line.empty() && line.back() == '\r') {
    line.pop_back();
  }
}

double parse_double(const std::string& field, long line_no, const std::string& field_name) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || field.empty() || !std::isfinite(value)) {
    throw ParseError(fmt::format("line {}: field '{}': '{}' is not a finite number", line_no,
                                 field_name, field));
  }
  return value;
}

long parse_long(const std::string& field, long line_no, const std::string& field_name) {
  long value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    throw ParseError(
        fmt::format("line {}: field '{}': '{}' is not an integer", line_no, field_name, field));
  }
  return value;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError(fmt::format("cannot open '{}' for reading", path.string()));
  }
  return in;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw IoError(fmt::format("cannot open '{}' for writing", path.string()));
  }
  out << content;
  out.flush();
  if (!out) {
    throw IoError(fmt::format("failed while writing '{}'", path.string()));
  }
}

}  // namespace avdeploy::csv
