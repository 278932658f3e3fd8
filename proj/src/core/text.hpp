#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace votetrace::text {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double value);
std::string format_fixed(double value, int decimals);

std::optional<double> parse_double(std::string_view field);
std::optional<std::int64_t> parse_int(std::string_view field);

// RFC 4180 field splitting: commas, double-quote quoting, "" escapes.
std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

std::vector<std::string_view> split_lines(std::string_view content);
std::string trim(std::string_view s);

std::string read_file(const std::filesystem::path& path, const char* module);
// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content,
                       const char* module);

}  // namespace votetrace::text
