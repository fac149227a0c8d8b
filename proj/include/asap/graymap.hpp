// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

namespace asap {

inline constexpr int kGrayMax = 255;

/// Plain-text PGM (P2), maxval 255, one row of pixels per line.
void write_graymap(std::ostream& out, std::size_t rows, std::size_t cols, std::span<const int> pixels);

struct Graymap {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<int> pixels;
};

/// Parses what write_graymap emits. Throws FormatError.
Graymap read_graymap(std::istream& in);

}  // namespace asap
