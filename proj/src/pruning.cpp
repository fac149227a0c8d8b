// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/pruning.hpp"

#include <algorithm>
#include <queue>
#include <string>
#include <tuple>

#include "asap/errors.hpp"
#include "asap/numerics.hpp"
#include "asap/simd.hpp"

namespace asap {

namespace {

struct Ranked {
    double score;
    std::size_t index;
};

// Strict weak order: higher score first, then lower index.
bool ranks_before(const Ranked& a, const Ranked& b) noexcept {
    if (a.score != b.score) {
        return a.score > b.score;
    }
    return a.index < b.index;
}

// Indices of the k best entries, ascending. A bounded heap keeps the worst
// retained candidate on top so each new entry is compared against it once.
std::vector<std::size_t> best_k(std::span<const std::size_t> candidates, std::span<const double> scores,
                                std::size_t k) {
    auto worse_on_top = [](const Ranked& a, const Ranked& b) { return ranks_before(a, b); };
    std::priority_queue<Ranked, std::vector<Ranked>, decltype(worse_on_top)> heap(worse_on_top);
    for (std::size_t i = 0; i < candidates.size() && k > 0; ++i) {
        const Ranked r{scores[i], candidates[i]};
        if (heap.size() < k) {
            heap.push(r);
        } else if (ranks_before(r, heap.top())) {
            heap.pop();
            heap.push(r);
        }
    }
    std::vector<std::size_t> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
        out.push_back(heap.top().index);
        heap.pop();
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

std::string_view to_string(SelectionMode m) noexcept {
    return m == SelectionMode::salience ? "salience" : "text_attention";
}

SelectionMode selection_mode_from_string(std::string_view s) {
    if (s == "text_attention") {
        return SelectionMode::text_attention;
    }
    if (s == "salience") {
        return SelectionMode::salience;
    }
    throw ConfigError("unknown selection mode '" + std::string(s) + "'");
}

void PruneConfig::validate(const SequenceLayout& layout) const {
    layout.validate();
    if (layout.visual.empty()) {
        throw ConfigError("pruning needs a non-empty visual span");
    }
    if (budget_k < 1 || budget_k > layout.visual.size()) {
        throw ConfigError("budget must be between 1 and " + std::to_string(layout.visual.size()) +
                          " (visual tokens), got " + std::to_string(budget_k));
    }
    if (!(similarity_threshold > -1.0 && similarity_threshold <= 1.0)) {
        throw ConfigError("similarity threshold must lie in (-1, 1], got " + std::to_string(similarity_threshold));
    }
    if (selection_mode == SelectionMode::text_attention && layout.text.empty()) {
        throw ConfigError("text_attention selection needs a non-empty text span");
    }
    mask.validate();
}

std::size_t Consolidation::absorbed_count() const noexcept {
    std::size_t n = 0;
    for (const auto& [dst, srcs] : merge_map) {
        n += srcs.size();
    }
    return n;
}

std::vector<double> text_attention_scores(const Matrix& attention, const SequenceLayout& layout) {
    if (attention.rows() != layout.total_len() || attention.cols() != layout.total_len()) {
        throw ShapeError("attention matrix does not match layout");
    }
    if (layout.text.empty()) {
        throw ConfigError("text_attention scores need a non-empty text span");
    }
    std::vector<double> scores(layout.visual.size(), 0.0);
    for (std::size_t i = layout.text.begin; i < layout.text.end; ++i) {
        for (std::size_t j = layout.visual.begin; j < layout.visual.end; ++j) {
            scores[j - layout.visual.begin] += attention(i, j);
        }
    }
    const double inv = 1.0 / static_cast<double>(layout.text.size());
    for (double& s : scores) {
        s *= inv;
    }
    return scores;
}

Selection select_topk_by_score(std::span<const std::size_t> candidates, std::span<const double> scores,
                               std::size_t k) {
    if (candidates.size() != scores.size()) {
        throw ShapeError("select_topk: score count does not match candidate count");
    }
    if (k > candidates.size()) {
        throw ConfigError("budget " + std::to_string(k) + " exceeds " + std::to_string(candidates.size()) +
                          " candidates");
    }
    Selection sel;
    sel.selected = best_k(candidates, scores, k);
    for (std::size_t c : candidates) {
        if (!std::binary_search(sel.selected.begin(), sel.selected.end(), c)) {
            sel.pruned_pool.push_back(c);
        }
    }
    std::sort(sel.pruned_pool.begin(), sel.pruned_pool.end());
    return sel;
}

Selection select_topk(const Matrix& attention, const SalienceProfile& salience, const SequenceLayout& layout,
                      const PruneConfig& cfg) {
    cfg.validate(layout);
    std::vector<std::size_t> candidates(layout.visual.size());
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        candidates[j] = layout.visual.begin + j;
    }
    if (cfg.selection_mode == SelectionMode::salience) {
        if (salience.normalized.size() != candidates.size()) {
            throw ShapeError("select_topk: salience does not cover the visual span");
        }
        return select_topk_by_score(candidates, salience.normalized, cfg.budget_k);
    }
    return select_topk_by_score(candidates, text_attention_scores(attention, layout), cfg.budget_k);
}

std::vector<double> salience_weighted_merge(const Matrix& participants, std::span<const double> weights) {
    if (participants.rows() == 0 || participants.rows() != weights.size()) {
        throw ShapeError("salience_weighted_merge: need one weight per participant");
    }
    const auto& kt = simd::active();
    const std::size_t d = participants.cols();
    double total = 0.0;
    for (double w : weights) {
        total += w;
    }
    // Written as dest + sum_s alpha_s * (h_s - dest), which is algebraically
    // the weighted mean and returns the shared vector exactly when all
    // participants are equal.
    const auto dest = participants.row(0);
    std::vector<double> out(dest.begin(), dest.end());
    std::vector<double> diff(d);
    const std::size_t n = participants.rows();
    for (std::size_t s = 1; s < n; ++s) {
        const double alpha = total > 0.0 ? weights[s] / total : 1.0 / static_cast<double>(n);
        const auto src = participants.row(s);
        for (std::size_t c = 0; c < d; ++c) {
            diff[c] = src[c] - dest[c];
        }
        kt.axpy(alpha, diff.data(), out.data(), d);
    }
    return out;
}

Consolidation consolidate(const Matrix& hidden, std::span<const std::size_t> selected,
                          std::span<const double> salience, double threshold) {
    const std::size_t n = selected.size();
    if (hidden.rows() != n || salience.size() != n) {
        throw ShapeError("consolidate: hidden rows, selection and salience must align");
    }
    if (!std::is_sorted(selected.begin(), selected.end()) ||
        std::adjacent_find(selected.begin(), selected.end()) != selected.end()) {
        throw ConfigError("consolidate: selection must be strictly ascending");
    }
    const Matrix sim = cosine_similarity(hidden);

    struct Pair {
        double similarity;
        std::size_t dst;  // local row
        std::size_t src;
    };
    std::vector<Pair> pairs;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            if (!(sim(a, b) > threshold)) {
                continue;
            }
            // a < b in sequence order, so a wins salience ties.
            if (salience[a] >= salience[b]) {
                pairs.push_back({sim(a, b), a, b});
            } else {
                pairs.push_back({sim(a, b), b, a});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) {
        if (x.similarity != y.similarity) {
            return x.similarity > y.similarity;
        }
        return std::tie(x.dst, x.src) < std::tie(y.dst, y.src);
    });

    enum class Role { free, destination, source };
    std::vector<Role> role(n, Role::free);
    std::vector<std::vector<std::size_t>> sources(n);
    for (const Pair& p : pairs) {
        if (role[p.src] != Role::free || role[p.dst] == Role::source) {
            continue;
        }
        role[p.dst] = Role::destination;
        role[p.src] = Role::source;
        sources[p.dst].push_back(p.src);
    }

    Consolidation out;
    std::vector<std::size_t> survivor_rows;
    for (std::size_t r = 0; r < n; ++r) {
        if (role[r] != Role::source) {
            survivor_rows.push_back(r);
            out.survivors.push_back(selected[r]);
        }
    }
    out.merged_hidden = hidden.gather_rows(survivor_rows);
    for (std::size_t i = 0; i < survivor_rows.size(); ++i) {
        const std::size_t r = survivor_rows[i];
        if (sources[r].empty()) {
            continue;
        }
        std::sort(sources[r].begin(), sources[r].end());
        std::vector<std::size_t> rows{r};
        rows.insert(rows.end(), sources[r].begin(), sources[r].end());
        std::vector<double> weights;
        std::vector<std::size_t> absorbed;
        for (std::size_t row : rows) {
            weights.push_back(salience[row]);
        }
        for (std::size_t s : sources[r]) {
            absorbed.push_back(selected[s]);
        }
        const std::vector<double> merged = salience_weighted_merge(hidden.gather_rows(rows), weights);
        std::copy(merged.begin(), merged.end(), out.merged_hidden.row(i).begin());
        out.merge_map.emplace(selected[r], std::move(absorbed));
    }
    return out;
}

Salvage salvage(std::span<const std::size_t> pool, std::span<const double> raw_mass, std::size_t slots) {
    if (pool.size() != raw_mass.size()) {
        throw ShapeError("salvage: raw mass must align with the pool");
    }
    Salvage out;
    const std::size_t take = std::min(slots, pool.size());
    out.shortfall = slots - take;
    out.indices = best_k(pool, raw_mass, take);
    return out;
}

PassOutput asap_pass(const Matrix& hidden, const Matrix& q, const Matrix& k, const SequenceLayout& layout,
                     const PruneConfig& cfg) {
    return asap_pass_from_alignment(hidden, scaled_alignment(q, k), layout, cfg);
}

PassOutput asap_pass_from_alignment(const Matrix& hidden, const Matrix& alignment, const SequenceLayout& layout,
                                    const PruneConfig& cfg) {
    cfg.validate(layout);
    if (hidden.rows() != layout.total_len()) {
        throw ShapeError("asap_pass: hidden has " + std::to_string(hidden.rows()) + " rows, layout has " +
                         std::to_string(layout.total_len()) + " tokens");
    }
    PassOutput out;
    out.salience = compute_salience(alignment, layout, cfg.mask.epsilon);
    const Matrix mask = cfg.selection_mask == SelectionMask::bidirectional
                            ? build_bidirectional_mask(out.salience, layout, cfg.mask)
                            : build_causal_mask(layout.total_len());
    const Matrix attention = masked_attention(alignment, mask);
    out.selection = select_topk(attention, out.salience, layout, cfg);

    const std::size_t v0 = layout.visual.begin;
    std::vector<double> selected_salience;
    for (std::size_t idx : out.selection.selected) {
        selected_salience.push_back(out.salience.normalized[idx - v0]);
    }
    Consolidation merged = consolidate(hidden.gather_rows(out.selection.selected), out.selection.selected,
                                       selected_salience, cfg.similarity_threshold);

    std::vector<double> pool_mass;
    for (std::size_t idx : out.selection.pruned_pool) {
        pool_mass.push_back(out.salience.raw_mass[idx - v0]);
    }
    Salvage salvaged = salvage(out.selection.pruned_pool, pool_mass, merged.absorbed_count());

    PruneResult& res = out.result;
    res.merge_map = std::move(merged.merge_map);
    res.salvaged_indices = salvaged.indices;
    res.shortfall = salvaged.shortfall;
    res.kept_indices = merged.survivors;
    res.kept_indices.insert(res.kept_indices.end(), salvaged.indices.begin(), salvaged.indices.end());
    std::sort(res.kept_indices.begin(), res.kept_indices.end());

    // Kept visual rows: merged state for survivors, original state for salvaged tokens.
    res.merged_hidden = Matrix(res.kept_indices.size(), hidden.cols());
    for (std::size_t i = 0; i < res.kept_indices.size(); ++i) {
        const std::size_t idx = res.kept_indices[i];
        const auto it = std::lower_bound(merged.survivors.begin(), merged.survivors.end(), idx);
        const auto src = (it != merged.survivors.end() && *it == idx)
                             ? merged.merged_hidden.row(static_cast<std::size_t>(it - merged.survivors.begin()))
                             : hidden.row(idx);
        std::copy(src.begin(), src.end(), res.merged_hidden.row(i).begin());
    }

    out.layout = SequenceLayout::from_lengths(layout.system.size(), res.kept_indices.size(), layout.text.size());
    out.hidden = Matrix(out.layout.total_len(), hidden.cols());
    out.positions.reserve(out.layout.total_len());
    std::size_t row = 0;
    auto emit = [&](std::span<const double> values, std::size_t position) {
        std::copy(values.begin(), values.end(), out.hidden.row(row++).begin());
        out.positions.push_back(position);
    };
    for (std::size_t i = layout.system.begin; i < layout.system.end; ++i) {
        emit(hidden.row(i), i);
    }
    for (std::size_t i = 0; i < res.kept_indices.size(); ++i) {
        emit(res.merged_hidden.row(i), res.kept_indices[i]);
    }
    for (std::size_t i = layout.text.begin; i < layout.text.end; ++i) {
        emit(hidden.row(i), i);
    }
    return out;
}

std::vector<int> prune_status_pixels(const PruneResult& result, const Span& visual) {
    std::vector<int> pixels(visual.size(), kPixelDropped);
    auto mark = [&](std::size_t idx, int value) {
        if (!visual.contains(idx)) {
            throw ShapeError("prune result index " + std::to_string(idx) + " lies outside the visual span");
        }
        pixels[idx - visual.begin] = value;
    };
    for (const auto& [dst, srcs] : result.merge_map) {
        for (std::size_t s : srcs) {
            mark(s, kPixelMerged);
        }
    }
    for (std::size_t idx : result.kept_indices) {
        mark(idx, kPixelKept);
    }
    for (std::size_t idx : result.salvaged_indices) {
        mark(idx, kPixelSalvaged);
    }
    return pixels;
}

std::vector<std::size_t> fastv_pass(const Matrix& causal_attention, const SequenceLayout& layout, std::size_t k) {
    layout.validate();
    if (k < 1 || k > layout.visual.size()) {
        throw ConfigError("budget must be between 1 and " + std::to_string(layout.visual.size()) +
                          " (visual tokens), got " + std::to_string(k));
    }
    std::vector<std::size_t> candidates(layout.visual.size());
    for (std::size_t j = 0; j < candidates.size(); ++j) {
        candidates[j] = layout.visual.begin + j;
    }
    return select_topk_by_score(candidates, text_attention_scores(causal_attention, layout), k).selected;
}

}  // namespace asap
