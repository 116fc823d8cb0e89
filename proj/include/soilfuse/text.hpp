#pragma once

// Small text helpers shared by the file-format readers and writers.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace soilfuse::text {

std::string_view trim(std::string_view s) noexcept;
std::string to_lower(std::string_view s);

/// Strict decimal parse of the whole (trimmed) field; nullopt on any junk.
std::optional<double> parse_double(std::string_view s) noexcept;
std::optional<long long> parse_int(std::string_view s) noexcept;

/// Shortest representation that round-trips to the same double.
std::string format_double(double v);

std::vector<std::string> split(std::string_view s, char sep);

/// RFC 4180 style CSV: quoted fields may hold separators, quotes and newlines.
std::vector<std::vector<std::string>> parse_csv(std::string_view doc);
std::string csv_escape(std::string_view field);
std::string csv_line(const std::vector<std::string>& fields);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

} // namespace soilfuse::text
