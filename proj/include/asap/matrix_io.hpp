// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Binary matrix container:
//   bytes 0..7   magic "ASAPMAT1"
//   bytes 8..15  rows, uint64 little-endian
//   bytes 16..23 cols, uint64 little-endian
//   then rows*cols IEEE-754 float32 little-endian values, row-major.

#include <filesystem>
#include <iosfwd>
#include <string_view>

#include "asap/matrix.hpp"

namespace asap {

inline constexpr std::string_view kMatrixMagic = "ASAPMAT1";

/// Entries are narrowed to float32.
void write_matrix(std::ostream& out, const Matrix& m);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

/// Throws FormatError naming the byte offset of the first problem.
Matrix read_matrix(std::istream& in);
Matrix read_matrix(const std::filesystem::path& path);

}  // namespace asap
