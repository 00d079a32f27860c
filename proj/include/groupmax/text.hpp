#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace groupmax {

/// Shortest decimal that parses back to exactly the same double.
std::string format_double(double v);
/// Whole-token parse; nullopt on any trailing garbage.
std::optional<double> parse_double(std::string_view s);

std::vector<std::string_view> split(std::string_view s, char sep);

/// Writes via a temporary file and rename so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace groupmax
