// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Desk-scale decoder used to exercise pruning end to end.
//
// Each layer is pre-norm attention with RoPE followed by a gated FFN, with
// seeded Gaussian weights. When pruning is requested the pass runs right
// after `prune_layer`, using that layer's per-head alignment (mean over
// heads) and its output hidden states. Later layers see the compacted
// sequence; every row keeps its original position for RoPE and causality.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "asap/masking.hpp"
#include "asap/matrix.hpp"
#include "asap/pruning.hpp"

namespace asap::harness {

struct ToyDecoderConfig {
    std::size_t layers = 4;
    std::size_t heads = 4;
    std::size_t head_dim = 16;
    std::size_t ffn_m = 64;
    std::size_t prune_layer = 2;
    std::uint64_t seed = 0;
    double rope_base = 10000.0;
    /// Positions at or beyond this are rejected.
    std::size_t max_positions = 4096;
    HeadAggregation head_aggregation = HeadAggregation::mean;

    std::size_t model_dim() const noexcept { return heads * head_dim; }
    void validate() const;
};

struct LayoutSpec {
    std::size_t system = 4;
    std::size_t visual = 64;
    std::size_t text = 8;
    std::size_t hidden_dim = 64;
};

struct GeneratedSequence {
    Matrix hidden;
    SequenceLayout layout;
};

/// Deterministic Gaussian hidden states for the given layout.
GeneratedSequence generate_sequence(const LayoutSpec& spec, std::uint64_t seed);

/// Keys (after RoPE, all heads side by side) and values for one layer.
struct LayerCache {
    Matrix keys;
    Matrix values;
    std::vector<std::size_t> positions;
};

struct KvCache {
    std::vector<LayerCache> layers;

    std::size_t rows(std::size_t layer) const { return layers.at(layer).positions.size(); }
    /// Largest cached position; throws if the cache is empty.
    std::size_t last_position() const;
};

struct ForwardResult {
    Matrix hidden;
    std::vector<std::size_t> positions;
    SequenceLayout layout;
    KvCache cache;
    std::optional<PassOutput> prune;
    /// Multiply-accumulates executed by each layer.
    std::vector<std::uint64_t> layer_macs;
};

class ToyDecoder {
public:
    explicit ToyDecoder(const ToyDecoderConfig& cfg);

    const ToyDecoderConfig& config() const noexcept { return m_cfg; }

    /// Runs the whole stack over `hidden`. Positions are 0..N-1.
    ForwardResult forward(const Matrix& hidden, const SequenceLayout& layout,
                          const std::optional<PruneConfig>& prune = std::nullopt) const;

    /// Appends `new_text` after the last cached position and returns its
    /// final hidden states. Cached rows are reused as-is.
    Matrix step(KvCache& cache, const Matrix& new_text) const;

    /// Per-head pre-softmax alignment of `hidden` at layer 0 (positions 0..N-1).
    std::vector<Matrix> layer0_alignment(const Matrix& hidden) const;

private:
    struct LayerWeights {
        Matrix wq, wk, wv, wo;
        Matrix w_gate, w_up, w_down;
    };

    struct LayerOutput {
        Matrix hidden;
        std::vector<Matrix> alignment;  // filled on request
        std::uint64_t macs = 0;
    };

    LayerOutput run_layer(std::size_t layer, const Matrix& x, std::span<const std::size_t> positions,
                          LayerCache& cache, bool want_alignment) const;

    ToyDecoderConfig m_cfg;
    std::vector<LayerWeights> m_layers;
};

struct RopeDecayConfig {
    std::size_t head_dim = 64;
    std::size_t draws = 1000;
    /// Use k = q for every draw.
    bool tied_qk = true;
    double base = 10000.0;
};

struct DecayRow {
    std::size_t distance = 0;
    double mean_score = 0.0;
    double mean_abs_score = 0.0;
};

/// Mean of dot(rope(q, distance), rope(k, 0)) over random unit vectors q, k.
std::vector<DecayRow> rope_decay_demo(std::uint64_t seed, std::span<const std::size_t> distances,
                                      const RopeDecayConfig& cfg = {});

}  // namespace asap::harness
