// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "asap/matrix.hpp"
#include "asap/simd.hpp"

namespace asap {

/// Rotary position embedding parameters. Dimensions (2i, 2i+1) rotate
/// together by angle position * base^(-2i / head_dim).
struct RopeParams {
    std::size_t head_dim = 0;
    double base = 10000.0;

    /// Throws ConfigError for odd or zero head_dim or a non-positive base.
    void validate() const;
};

/// W[i][j] = dot(q_i, k_j) / sqrt(head_dim). The scale is the per-head width
/// (the number of columns of `q`).
Matrix scaled_alignment(const Matrix& q, const Matrix& k, const simd::KernelTable& kt = simd::active());

/// Row-wise softmax with the row maximum subtracted first. `kMasked` entries
/// map to exactly 0. Throws NumericError when a row is entirely masked.
Matrix softmax_rows(const Matrix& s, const simd::KernelTable& kt = simd::active());

/// Pairwise cosine similarity of the rows of `h`. The result is exactly
/// symmetric. A zero row has similarity 0 with every row, itself included.
Matrix cosine_similarity(const Matrix& h, const simd::KernelTable& kt = simd::active());

/// (x - min) / (max - min + epsilon).
std::vector<double> min_max_normalize(std::span<const double> x, double epsilon);

/// Rotates row i as if it sat at position start_position + i.
Matrix rope_apply(const Matrix& x, const RopeParams& params, std::size_t start_position);

/// Rotates row i as if it sat at position positions[i].
Matrix rope_apply(const Matrix& x, const RopeParams& params, std::span<const std::size_t> positions);

/// Plain product a * b.
Matrix matmul(const Matrix& a, const Matrix& b, const simd::KernelTable& kt = simd::active());

/// Elementwise a + b.
Matrix add(const Matrix& a, const Matrix& b);

}  // namespace asap
