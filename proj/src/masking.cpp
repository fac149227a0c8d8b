// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/masking.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "asap/errors.hpp"
#include "asap/graymap.hpp"
#include "asap/numerics.hpp"

namespace asap {

SequenceLayout SequenceLayout::from_lengths(std::size_t system_len, std::size_t visual_len, std::size_t text_len) {
    SequenceLayout l;
    l.system = {0, system_len};
    l.visual = {system_len, system_len + visual_len};
    l.text = {l.visual.end, l.visual.end + text_len};
    return l;
}

void SequenceLayout::validate() const {
    if (system.begin != 0 || system.end < system.begin || visual.begin != system.end || visual.end < visual.begin ||
        text.begin != visual.end || text.end < text.begin) {
        throw ConfigError("sequence layout spans must be contiguous and ordered system < visual < text");
    }
}

void MaskConfig::validate() const {
    if (!(lambda_max > 0.0 && lambda_max <= 1.0)) {
        throw ConfigError("lambda_max must lie in (0, 1], got " + std::to_string(lambda_max));
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("epsilon must be positive");
    }
}

Matrix aggregate_heads(std::span<const Matrix> per_head, HeadAggregation mode, std::size_t head) {
    if (per_head.empty()) {
        throw ShapeError("aggregate_heads: no heads");
    }
    if (mode == HeadAggregation::single) {
        if (head >= per_head.size()) {
            throw ConfigError("aggregate_heads: head index out of range");
        }
        return per_head[head];
    }
    Matrix acc = per_head[0];
    for (std::size_t h = 1; h < per_head.size(); ++h) {
        acc = add(acc, per_head[h]);
    }
    if (mode == HeadAggregation::mean) {
        const double inv = 1.0 / static_cast<double>(per_head.size());
        for (double& v : acc.data()) {
            v *= inv;
        }
    }
    return acc;
}

Matrix build_causal_mask(std::size_t n) {
    if (n == 0) {
        throw ShapeError("causal mask needs at least one token");
    }
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            m(i, j) = kMasked;
        }
    }
    return m;
}

std::vector<double> attention_mass(const Matrix& w, const SequenceLayout& layout) {
    layout.validate();
    if (w.rows() != w.cols() || w.rows() != layout.total_len()) {
        throw ShapeError("attention_mass: alignment is " + std::to_string(w.rows()) + "x" +
                         std::to_string(w.cols()) + " but layout has " + std::to_string(layout.total_len()) +
                         " tokens");
    }
    if (layout.visual.empty()) {
        throw ConfigError("attention_mass: empty visual span");
    }
    std::vector<double> mass(layout.visual.size(), 0.0);
    for (std::size_t i = layout.visual.begin; i < layout.visual.end; ++i) {
        for (std::size_t j = layout.visual.begin; j < layout.visual.end; ++j) {
            mass[j - layout.visual.begin] += w(i, j);
        }
    }
    return mass;
}

SalienceProfile compute_salience(const Matrix& w, const SequenceLayout& layout, double epsilon) {
    SalienceProfile p;
    p.raw_mass = attention_mass(w, layout);
    p.normalized = min_max_normalize(p.raw_mass, epsilon);
    return p;
}

std::vector<double> visual_penalties(const SalienceProfile& salience, const MaskConfig& cfg) {
    cfg.validate();
    std::vector<double> out(salience.normalized.size());
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = std::log(std::max(cfg.lambda_max * salience.normalized[j], cfg.epsilon));
    }
    return out;
}

Matrix build_bidirectional_mask(const SalienceProfile& salience, const SequenceLayout& layout, const MaskConfig& cfg) {
    layout.validate();
    if (salience.normalized.size() != layout.visual.size()) {
        throw ShapeError("bidirectional mask: salience covers " + std::to_string(salience.normalized.size()) +
                         " tokens, visual span has " + std::to_string(layout.visual.size()));
    }
    const std::vector<double> penalty = visual_penalties(salience, cfg);
    Matrix m = build_causal_mask(layout.total_len());
    const Span v = layout.visual;
    for (std::size_t i = v.begin; i < v.end; ++i) {
        for (std::size_t j = i + 1; j < v.end; ++j) {
            m(i, j) = penalty[j - v.begin];
        }
    }
    return m;
}

Matrix masked_attention(const Matrix& w, const Matrix& mask) {
    if (w.rows() != mask.rows() || w.cols() != mask.cols()) {
        throw ShapeError("masked_attention: logits and mask shapes differ");
    }
    return softmax_rows(add(w, mask));
}

void write_penalty_graymap(std::ostream& out, const SalienceProfile& salience, const MaskConfig& cfg,
                           std::size_t grid_rows, std::size_t grid_cols) {
    const std::vector<double> penalty = visual_penalties(salience, cfg);
    if (grid_rows * grid_cols != penalty.size()) {
        throw ShapeError("penalty graymap: " + std::to_string(penalty.size()) + " tokens do not fill a " +
                         std::to_string(grid_rows) + "x" + std::to_string(grid_cols) + " grid");
    }
    const double floor = std::log(cfg.epsilon);
    std::vector<int> pixels(penalty.size());
    for (std::size_t j = 0; j < penalty.size(); ++j) {
        pixels[j] = static_cast<int>(std::lround(255.0 * (1.0 - penalty[j] / floor)));
    }
    write_graymap(out, grid_rows, grid_cols, pixels);
}

}  // namespace asap
