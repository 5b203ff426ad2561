// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Locale-independent number formatting and small file helpers shared by the
// CSV, manifest and binary writers.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gmmflow {

/// Shortest-roundtrip-safe rendering with 17 significant digits.
std::string fmt17(double v);

/// Parses a double written by fmt17 (or any plain decimal); throws kFormat.
double parse_double(std::string_view s);

/// Comma-separated list of numbers, e.g. "5,10,20".
std::vector<double> parse_double_list(std::string_view s);
std::vector<int> parse_int_list(std::string_view s);

/// Writes to `path + ".tmp"` and renames over `path`. Throws kIo.
void write_file_atomic(const std::string& path, std::string_view content);
std::string read_file(const std::string& path);

/// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t h = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

}  // namespace gmmflow
