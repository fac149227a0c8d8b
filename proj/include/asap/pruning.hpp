// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

// Visual-token pruning: top-k selection under the salience-guided mask,
// salience-weighted consolidation of redundant kept tokens, and salvage of
// the slots that consolidation frees.

#include <cstddef>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "asap/masking.hpp"
#include "asap/matrix.hpp"

namespace asap {

enum class SelectionMode {
    /// Mean attention each visual token receives from the text rows.
    text_attention,
    /// Normalized salience.
    salience,
};

/// Mask used to compute the attention that drives selection. `causal` is the
/// ablation reference (plain top-k under causal attention).
enum class SelectionMask { bidirectional, causal };

std::string_view to_string(SelectionMode m) noexcept;
SelectionMode selection_mode_from_string(std::string_view s);

inline constexpr double kDefaultSimilarityThreshold = 0.8;

struct PruneConfig {
    std::size_t budget_k = 0;
    /// Cosine similarity must strictly exceed this for a merge. 1.0 disables merging.
    double similarity_threshold = kDefaultSimilarityThreshold;
    SelectionMode selection_mode = SelectionMode::text_attention;
    SelectionMask selection_mask = SelectionMask::bidirectional;
    MaskConfig mask;

    void validate(const SequenceLayout& layout) const;
};

/// Destination sequence index -> absorbed source indices (ascending).
using MergeMap = std::map<std::size_t, std::vector<std::size_t>>;

struct Selection {
    std::vector<std::size_t> selected;     // ascending
    std::vector<std::size_t> pruned_pool;  // ascending
};

struct Consolidation {
    MergeMap merge_map;
    /// Selected tokens that were not absorbed, ascending.
    std::vector<std::size_t> survivors;
    /// One row per survivor; destinations carry their merged state.
    Matrix merged_hidden;

    std::size_t absorbed_count() const noexcept;
};

struct Salvage {
    std::vector<std::size_t> indices;  // ascending
    /// Requested slots the pool could not fill.
    std::size_t shortfall = 0;
};

struct PruneResult {
    /// Surviving and salvaged visual positions, ascending.
    std::vector<std::size_t> kept_indices;
    MergeMap merge_map;
    std::vector<std::size_t> salvaged_indices;
    /// One row per kept index.
    Matrix merged_hidden;
    std::size_t shortfall = 0;
};

/// Everything an ASAP pass produces, including the compacted sequence.
struct PassOutput {
    PruneResult result;
    SalienceProfile salience;
    Selection selection;
    /// Layout of the compacted sequence.
    SequenceLayout layout;
    /// Compacted hidden states: system rows, kept visual rows, text rows.
    Matrix hidden;
    /// Original sequence position of each compacted row.
    std::vector<std::size_t> positions;
};

/// Per-visual-token score used by text_attention selection: mean over text rows of A[i][j].
std::vector<double> text_attention_scores(const Matrix& attention, const SequenceLayout& layout);

/// Top budget_k visual positions by score; ties go to the lower position.
Selection select_topk(const Matrix& attention, const SalienceProfile& salience, const SequenceLayout& layout,
                      const PruneConfig& cfg);

/// Same ranking rule over an explicit score vector aligned with `candidates`.
Selection select_topk_by_score(std::span<const std::size_t> candidates, std::span<const double> scores,
                               std::size_t k);

/// Salience-weighted convex combination. Row 0 of `participants` is the
/// destination; `weights` are their normalized saliences. Falls back to the
/// unweighted mean when every weight is zero.
std::vector<double> salience_weighted_merge(const Matrix& participants, std::span<const double> weights);

/// Merges redundant tokens among the selection.
///
/// `hidden` holds one row per entry of `selected` (sequence positions,
/// ascending) and `salience` the matching normalized saliences. A pair merges
/// when its cosine similarity exceeds `threshold`; the higher-salience token
/// (lower position on ties) is the destination. Pairs are taken greedily in
/// descending similarity, ties by lower destination then lower source; a
/// token is absorbed at most once and never both absorbs and is absorbed.
Consolidation consolidate(const Matrix& hidden, std::span<const std::size_t> selected,
                          std::span<const double> salience, double threshold);

/// The `slots` pool entries with the highest raw mass (aligned with `pool`),
/// ties to the lower position, returned ascending.
Salvage salvage(std::span<const std::size_t> pool, std::span<const double> raw_mass, std::size_t slots);

/// Full pass from per-sequence queries and keys (single head).
PassOutput asap_pass(const Matrix& hidden, const Matrix& q, const Matrix& k, const SequenceLayout& layout,
                     const PruneConfig& cfg);

/// Full pass from a precomputed pre-softmax alignment matrix.
PassOutput asap_pass_from_alignment(const Matrix& hidden, const Matrix& alignment, const SequenceLayout& layout,
                                    const PruneConfig& cfg);

inline constexpr int kPixelKept = 255;
inline constexpr int kPixelSalvaged = 192;
inline constexpr int kPixelMerged = 64;
inline constexpr int kPixelDropped = 0;

/// Status of every visual token, in visual-span order: kept, salvaged,
/// merged into another token, or dropped.
std::vector<int> prune_status_pixels(const PruneResult& result, const Span& visual);

/// Plain top-k under causal attention ranked by mean text-row attention.
std::vector<std::size_t> fastv_pass(const Matrix& causal_attention, const SequenceLayout& layout, std::size_t k);

}  // namespace asap
