#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace sector_embed::textio {

// Splits one CSV record. Handles double-quoted fields with "" escapes.
// Throws ParseError (without line context) on an unterminated quote.
std::vector<std::string> split_csv(std::string_view line);

// Quotes a field if it contains a comma, quote or newline.
std::string csv_field(std::string_view value);

std::string trim(std::string_view s);

// Shortest round-trip-safe rendering: 17 significant digits.
std::string format_double(double value);

// Fixed-point rendering for human-facing tables.
std::string format_fixed(double value, int decimals);

double parse_double(std::string_view s, const std::string& context);
long long parse_int(std::string_view s, const std::string& context);

std::string read_file(const std::filesystem::path& path);
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

bool is_valid_utf8(std::string_view s);

// FNV-1a 64-bit, rendered as 16 hex digits.
std::string fnv1a_hex(std::string_view data);

}  // namespace sector_embed::textio
