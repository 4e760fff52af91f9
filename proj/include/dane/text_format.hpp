#pragma once

// Small text helpers shared by the dataset, checkpoint and report writers.

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dane::text {

std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_whitespace(std::string_view s);

std::optional<std::size_t> parse_index(std::string_view s);
std::optional<double> parse_double(std::string_view s);

// Shortest representation that parses back to the identical double.
std::string format_double(double value);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace dane::text
