// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Causal and salience-guided bidirectional attention masks.
//
// The bidirectional mask relaxes causality only inside the visual span: a
// visual query i may see a later visual key j with additive penalty
// ln(max(lambda_max * salience_j, epsilon)). Everything outside that block
// keeps the causal mask, so text and system tokens stay autoregressive.

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "asap/matrix.hpp"

namespace asap {

/// Half-open index range [begin, end).
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    bool empty() const noexcept { return begin == end; }
    bool contains(std::size_t i) const noexcept { return i >= begin && i < end; }

    friend bool operator==(const Span&, const Span&) = default;
};

/// Partition of a sequence into system prompt, visual tokens and text query, in that order.
struct SequenceLayout {
    Span system;
    Span visual;
    Span text;

    static SequenceLayout from_lengths(std::size_t system_len, std::size_t visual_len, std::size_t text_len);

    std::size_t total_len() const noexcept { return text.end; }

    /// Throws ConfigError unless the spans are ordered, contiguous and start at 0.
    void validate() const;

    friend bool operator==(const SequenceLayout&, const SequenceLayout&) = default;
};

/// Per-visual-token attention mass and its min-max normalized form.
struct SalienceProfile {
    std::vector<double> raw_mass;
    std::vector<double> normalized;
};

inline constexpr double kDefaultEpsilon = 1e-6;
inline constexpr double kDefaultLambdaMax = 0.5;

struct MaskConfig {
    double lambda_max = kDefaultLambdaMax;
    double epsilon = kDefaultEpsilon;

    void validate() const;
};

/// How per-head alignment matrices are reduced to the single matrix used for salience.
enum class HeadAggregation { mean, sum, single };

Matrix aggregate_heads(std::span<const Matrix> per_head, HeadAggregation mode, std::size_t head = 0);

/// 0 on and below the diagonal, kMasked above.
Matrix build_causal_mask(std::size_t n);

/// s_j = sum over visual rows i of W[i][j], for every visual column j.
/// Uses the raw matrix, including entries above the diagonal.
std::vector<double> attention_mass(const Matrix& w, const SequenceLayout& layout);

SalienceProfile compute_salience(const Matrix& w, const SequenceLayout& layout, double epsilon = kDefaultEpsilon);

Matrix build_bidirectional_mask(const SalienceProfile& salience, const SequenceLayout& layout, const MaskConfig& cfg);

/// softmax_rows(w + mask).
Matrix masked_attention(const Matrix& w, const Matrix& mask);

/// Forward-visibility penalty of each visual column: ln(max(lambda_max * s, epsilon)).
std::vector<double> visual_penalties(const SalienceProfile& salience, const MaskConfig& cfg);

/// Writes a plain (P2) graymap of the per-token penalties laid out on a
/// grid_rows x grid_cols patch grid. Penalty 0 is white (255), the epsilon
/// floor is black (0), and values between scale linearly in log space.
void write_penalty_graymap(std::ostream& out, const SalienceProfile& salience, const MaskConfig& cfg,
                           std::size_t grid_rows, std::size_t grid_cols);

}  // namespace asap
