// Copyright 2026 The ITES Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Small string and file helpers shared by the readers of the bundle formats.
namespace ites::text {

std::string_view trim(std::string_view s);
bool starts_with(std::string_view s, std::string_view prefix);

std::vector<std::string_view> split(std::string_view s, char sep);
std::vector<std::string_view> split_ws(std::string_view s);
/// Splits on '\n', dropping a trailing '\r' from each line. A final newline
/// does not produce an empty trailing line.
std::vector<std::string_view> split_lines(std::string_view s);

/// Splits one CSV record. Fields may be double-quoted ("" escapes a quote).
std::vector<std::string> csv_fields(std::string_view line);

std::optional<double> to_double(std::string_view s);
std::optional<long> to_long(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace ites::text
