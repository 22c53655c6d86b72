#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hardbench::io {

/// Writes `content` to a sibling temp file and renames it over `path`, so
/// readers never observe a partially written file. Creates parent dirs.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// Shortest decimal form that round-trips exactly; NaN is written as "NA".
std::string format_double(double value);

/// Fixed-decimals rendering used by human-facing labels.
std::string format_fixed(double value, int decimals);

/// Splits one CSV record on commas, honoring double-quoted fields.
std::vector<std::string> split_csv_line(std::string_view line);

/// Quotes a CSV field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

std::string trim(std::string_view text);

}  // namespace hardbench::io
