#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace avdeploy::csv {

/// Splits one CSV line on commas. The formats used here never quote fields.
std::vector<std::string> split(const std::string& line);

/// Strips a trailing carriage return so CRLF inputs parse cleanly.
void trim_cr(std::string& line);

/// Numeric field parsers; errors carry the 1-based line number and field name.
double parse_double(const std::string& field, long line_no, const std::string& field_name);
long parse_long(const std::string& field, long line_no, const std::string& field_name);

/// Opens for reading or throws IoError naming the path.
std::ifstream open_input(const std::filesystem::path& path);

/// Writes the full content or throws IoError naming the path.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace avdeploy::csv
