// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/harness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "asap/errors.hpp"
#include "asap/numerics.hpp"
#include "asap/simd.hpp"

namespace asap::harness {

namespace {

constexpr double kNormEpsilon = 1e-6;
// Weight streams are derived from the config seed so layers never share draws.
constexpr std::uint64_t kLayerSeedStride = 0x9E3779B97F4A7C15ull;

Matrix gaussian(std::size_t rows, std::size_t cols, double stddev, std::mt19937_64& rng) {
    std::normal_distribution<double> dist(0.0, stddev);
    Matrix m(rows, cols);
    for (double& v : m.data()) {
        v = dist(rng);
    }
    return m;
}

Matrix rms_norm(const Matrix& x) {
    const auto& kt = simd::active();
    Matrix out = x;
    for (std::size_t r = 0; r < x.rows(); ++r) {
        auto row = out.row(r);
        const double ms = kt.dot(row.data(), row.data(), row.size()) / static_cast<double>(row.size());
        kt.scale(1.0 / std::sqrt(ms + kNormEpsilon), row.data(), row.size());
    }
    return out;
}

Matrix columns(const Matrix& x, std::size_t begin, std::size_t count) {
    Matrix out(x.rows(), count);
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto src = x.row(r).subspan(begin, count);
        std::copy(src.begin(), src.end(), out.row(r).begin());
    }
    return out;
}

void set_columns(Matrix& x, std::size_t begin, const Matrix& block) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto src = block.row(r);
        std::copy(src.begin(), src.end(), x.row(r).begin() + static_cast<std::ptrdiff_t>(begin));
    }
}

Matrix append_rows(const Matrix& top, const Matrix& bottom) {
    if (top.empty() && top.rows() == 0) {
        return bottom;
    }
    std::vector<double> data(top.data().begin(), top.data().end());
    data.insert(data.end(), bottom.data().begin(), bottom.data().end());
    return Matrix(top.rows() + bottom.rows(), bottom.cols(), std::move(data));
}

double silu(double x) { return x / (1.0 + std::exp(-x)); }

}  // namespace

void ToyDecoderConfig::validate() const {
    if (layers == 0 || heads == 0 || ffn_m == 0) {
        throw ConfigError("decoder needs at least one layer, head and FFN unit");
    }
    if (head_dim == 0 || head_dim % 2 != 0) {
        throw ConfigError("head_dim must be a positive even number, got " + std::to_string(head_dim));
    }
    if (prune_layer >= layers) {
        throw ConfigError("prune layer " + std::to_string(prune_layer) + " must be below layer count " +
                          std::to_string(layers));
    }
}

std::size_t KvCache::last_position() const {
    if (layers.empty() || layers.front().positions.empty()) {
        throw ConfigError("KV cache is empty");
    }
    return layers.front().positions.back();
}

GeneratedSequence generate_sequence(const LayoutSpec& spec, std::uint64_t seed) {
    if (spec.hidden_dim == 0) {
        throw ConfigError("hidden_dim must be positive");
    }
    GeneratedSequence out;
    out.layout = SequenceLayout::from_lengths(spec.system, spec.visual, spec.text);
    std::mt19937_64 rng(seed);
    out.hidden = gaussian(out.layout.total_len(), spec.hidden_dim, 1.0, rng);
    return out;
}

ToyDecoder::ToyDecoder(const ToyDecoderConfig& cfg) : m_cfg(cfg) {
    m_cfg.validate();
    const std::size_t d = m_cfg.model_dim();
    const double proj = 1.0 / std::sqrt(static_cast<double>(d));
    const double down = 1.0 / std::sqrt(static_cast<double>(m_cfg.ffn_m));
    for (std::size_t l = 0; l < m_cfg.layers; ++l) {
        std::mt19937_64 rng(m_cfg.seed + (l + 1) * kLayerSeedStride);
        LayerWeights w;
        w.wq = gaussian(d, d, proj, rng);
        w.wk = gaussian(d, d, proj, rng);
        w.wv = gaussian(d, d, proj, rng);
        w.wo = gaussian(d, d, proj, rng);
        w.w_gate = gaussian(d, m_cfg.ffn_m, proj, rng);
        w.w_up = gaussian(d, m_cfg.ffn_m, proj, rng);
        w.w_down = gaussian(m_cfg.ffn_m, d, down, rng);
        m_layers.push_back(std::move(w));
    }
}

ToyDecoder::LayerOutput ToyDecoder::run_layer(std::size_t layer, const Matrix& x,
                                              std::span<const std::size_t> positions, LayerCache& cache,
                                              bool want_alignment) const {
    const auto& kt = simd::active();
    const LayerWeights& w = m_layers[layer];
    const std::size_t n = x.rows();
    const std::size_t d = m_cfg.model_dim();
    const std::size_t hd = m_cfg.head_dim;
    const RopeParams rope{hd, m_cfg.rope_base};
    LayerOutput out;

    const Matrix xn = rms_norm(x);
    Matrix q = matmul(xn, w.wq);
    Matrix k = matmul(xn, w.wk);
    const Matrix v = matmul(xn, w.wv);
    out.macs += 3 * n * d * d;
    for (std::size_t h = 0; h < m_cfg.heads; ++h) {
        set_columns(q, h * hd, rope_apply(columns(q, h * hd, hd), rope, positions));
        set_columns(k, h * hd, rope_apply(columns(k, h * hd, hd), rope, positions));
    }
    cache.keys = append_rows(cache.keys, k);
    cache.values = append_rows(cache.values, v);
    cache.positions.insert(cache.positions.end(), positions.begin(), positions.end());
    const std::size_t total = cache.positions.size();

    Matrix mixed(n, d);
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(hd));
    for (std::size_t h = 0; h < m_cfg.heads; ++h) {
        Matrix logits(n, total);
        for (std::size_t i = 0; i < n; ++i) {
            const double* qi = q.row(i).data() + h * hd;
            for (std::size_t r = 0; r < total; ++r) {
                logits(i, r) = kt.dot(qi, cache.keys.row(r).data() + h * hd, hd) * inv_scale;
            }
        }
        if (want_alignment) {
            out.alignment.push_back(logits);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t r = 0; r < total; ++r) {
                if (cache.positions[r] > positions[i]) {
                    logits(i, r) = kMasked;
                }
            }
        }
        const Matrix attn = softmax_rows(logits);
        for (std::size_t i = 0; i < n; ++i) {
            double* dst = mixed.row(i).data() + h * hd;
            for (std::size_t r = 0; r < total; ++r) {
                const double a = attn(i, r);
                if (a != 0.0) {
                    kt.axpy(a, cache.values.row(r).data() + h * hd, dst, hd);
                }
            }
        }
    }
    out.macs += 2 * n * total * d;

    Matrix h1 = add(x, matmul(mixed, w.wo));
    out.macs += n * d * d;

    const Matrix hn = rms_norm(h1);
    Matrix gate = matmul(hn, w.w_gate);
    const Matrix up = matmul(hn, w.w_up);
    for (std::size_t i = 0; i < gate.size(); ++i) {
        gate.data()[i] = silu(gate.data()[i]) * up.data()[i];
    }
    out.hidden = add(h1, matmul(gate, w.w_down));
    out.macs += 3 * n * d * m_cfg.ffn_m;
    return out;
}

ForwardResult ToyDecoder::forward(const Matrix& hidden, const SequenceLayout& layout,
                                  const std::optional<PruneConfig>& prune) const {
    layout.validate();
    if (hidden.rows() != layout.total_len() || hidden.cols() != m_cfg.model_dim()) {
        throw ShapeError("decoder input is " + std::to_string(hidden.rows()) + "x" + std::to_string(hidden.cols()) +
                         ", expected " + std::to_string(layout.total_len()) + "x" +
                         std::to_string(m_cfg.model_dim()));
    }
    if (layout.total_len() > m_cfg.max_positions) {
        throw ConfigError("sequence exceeds max_positions");
    }
    if (prune) {
        prune->validate(layout);
    }
    ForwardResult res;
    res.hidden = hidden;
    res.layout = layout;
    res.positions.resize(layout.total_len());
    for (std::size_t i = 0; i < res.positions.size(); ++i) {
        res.positions[i] = i;
    }
    res.cache.layers.resize(m_cfg.layers);
    for (std::size_t l = 0; l < m_cfg.layers; ++l) {
        const bool prune_here = prune.has_value() && l == m_cfg.prune_layer;
        LayerOutput lo = run_layer(l, res.hidden, res.positions, res.cache.layers[l], prune_here);
        res.layer_macs.push_back(lo.macs);
        res.hidden = std::move(lo.hidden);
        if (prune_here) {
            const Matrix w = aggregate_heads(lo.alignment, m_cfg.head_aggregation);
            PassOutput pass = asap_pass_from_alignment(res.hidden, w, res.layout, *prune);
            res.hidden = pass.hidden;
            res.layout = pass.layout;
            // The pass reports positions relative to its input, which at this
            // point is still the uncompressed sequence.
            std::vector<std::size_t> original(pass.positions.size());
            for (std::size_t i = 0; i < original.size(); ++i) {
                original[i] = res.positions[pass.positions[i]];
            }
            res.positions = std::move(original);
            res.prune = std::move(pass);
        }
    }
    return res;
}

Matrix ToyDecoder::step(KvCache& cache, const Matrix& new_text) const {
    if (cache.layers.size() != m_cfg.layers) {
        throw ConfigError("KV cache does not match the decoder's layer count");
    }
    if (new_text.rows() == 0) {
        return Matrix(0, m_cfg.model_dim());
    }
    if (new_text.cols() != m_cfg.model_dim()) {
        throw ShapeError("new text rows must have width " + std::to_string(m_cfg.model_dim()));
    }
    const std::size_t first = cache.last_position() + 1;
    if (first + new_text.rows() > m_cfg.max_positions) {
        throw ConfigError("position " + std::to_string(first + new_text.rows() - 1) + " exceeds max_positions " +
                          std::to_string(m_cfg.max_positions));
    }
    std::vector<std::size_t> positions(new_text.rows());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = first + i;
    }
    // Work on a copy so a failure part way through leaves the cache untouched.
    KvCache updated = cache;
    Matrix h = new_text;
    for (std::size_t l = 0; l < m_cfg.layers; ++l) {
        h = run_layer(l, h, positions, updated.layers[l], false).hidden;
    }
    cache = std::move(updated);
    return h;
}

std::vector<Matrix> ToyDecoder::layer0_alignment(const Matrix& hidden) const {
    std::vector<std::size_t> positions(hidden.rows());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = i;
    }
    LayerCache scratch;
    return run_layer(0, hidden, positions, scratch, true).alignment;
}

std::vector<DecayRow> rope_decay_demo(std::uint64_t seed, std::span<const std::size_t> distances,
                                      const RopeDecayConfig& cfg) {
    if (distances.empty()) {
        throw ConfigError("rope_decay_demo needs at least one distance");
    }
    if (cfg.draws == 0) {
        throw ConfigError("rope_decay_demo needs at least one draw");
    }
    const RopeParams rope{cfg.head_dim, cfg.base};
    rope.validate();
    const auto& kt = simd::active();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    auto unit = [&] {
        Matrix v(1, cfg.head_dim);
        for (double& x : v.data()) {
            x = dist(rng);
        }
        const double norm = std::sqrt(kt.dot(v.data().data(), v.data().data(), cfg.head_dim));
        kt.scale(1.0 / norm, v.data().data(), cfg.head_dim);
        return v;
    };

    std::vector<DecayRow> rows(distances.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        rows[i].distance = distances[i];
    }
    for (std::size_t draw = 0; draw < cfg.draws; ++draw) {
        const Matrix q = unit();
        const Matrix k = cfg.tied_qk ? q : unit();
        const Matrix k_rot = rope_apply(k, rope, 0);
        for (DecayRow& row : rows) {
            const Matrix q_rot = rope_apply(q, rope, row.distance);
            const double s = kt.dot(q_rot.data().data(), k_rot.data().data(), cfg.head_dim);
            row.mean_score += s;
            row.mean_abs_score += std::abs(s);
        }
    }
    for (DecayRow& row : rows) {
        row.mean_score /= static_cast<double>(cfg.draws);
        row.mean_abs_score /= static_cast<double>(cfg.draws);
    }
    return rows;
}

}  // namespace asap::harness
