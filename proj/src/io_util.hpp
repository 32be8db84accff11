#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace cauda::detail {

/// Whole-file read; IoError on failure.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Lines without terminators; a trailing newline does not yield an empty
/// final line. CR before LF is dropped.
std::vector<std::string_view> split_lines(std::string_view text);

std::vector<std::string_view> split(std::string_view text, char sep);

std::string_view trim(std::string_view s);

/// Full-match unsigned parse; false on any junk.
bool parse_u64(std::string_view s, unsigned long long& out);

/// Shortest text that parses back to exactly `v`.
std::string format_double(double v);
bool parse_double(std::string_view s, double& out);

}  // namespace cauda::detail
