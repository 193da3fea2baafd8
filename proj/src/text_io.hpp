// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace rshmm::detail {

std::string read_file(const std::string& path);

/// Writes through a temporary sibling and renames it into place.
void write_file_atomic(const std::string& path, const std::string& content);

std::vector<std::string> split_csv_line(std::string_view line);

bool parse_double(std::string_view s, double& out);

/// Shortest round-trip formatting.
std::string format_double(double v);

}  // namespace rshmm::detail
