// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "asap/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asap/errors.hpp"

namespace asap {

void RopeParams::validate() const {
    if (head_dim == 0 || head_dim % 2 != 0) {
        throw ConfigError("rope head_dim must be a positive even number, got " + std::to_string(head_dim));
    }
    if (!(base > 0.0) || !std::isfinite(base)) {
        throw ConfigError("rope base must be positive");
    }
}

Matrix scaled_alignment(const Matrix& q, const Matrix& k, const simd::KernelTable& kt) {
    if (q.cols() != k.cols() || q.cols() == 0) {
        throw ShapeError("scaled_alignment: query width " + std::to_string(q.cols()) + " vs key width " +
                         std::to_string(k.cols()));
    }
    if (q.rows() != k.rows()) {
        throw ShapeError("scaled_alignment: " + std::to_string(q.rows()) + " queries vs " +
                         std::to_string(k.rows()) + " keys");
    }
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
    Matrix w(q.rows(), k.rows());
    for (std::size_t i = 0; i < q.rows(); ++i) {
        const double* qi = q.row(i).data();
        for (std::size_t j = 0; j < k.rows(); ++j) {
            w(i, j) = kt.dot(qi, k.row(j).data(), q.cols()) * inv_scale;
        }
    }
    return w;
}

Matrix softmax_rows(const Matrix& s, const simd::KernelTable& kt) {
    Matrix out(s.rows(), s.cols());
    for (std::size_t r = 0; r < s.rows(); ++r) {
        const auto in = s.row(r);
        auto dst = out.row(r);
        if (in.empty()) {
            continue;
        }
        const double row_max = kt.max(in.data(), in.size());
        if (is_masked(row_max)) {
            throw NumericError("softmax row " + std::to_string(r) + " is fully masked");
        }
        for (std::size_t c = 0; c < in.size(); ++c) {
            dst[c] = is_masked(in[c]) ? 0.0 : std::exp(in[c] - row_max);
        }
        const double total = kt.sum(dst.data(), dst.size());
        kt.scale(1.0 / total, dst.data(), dst.size());
    }
    return out;
}

Matrix cosine_similarity(const Matrix& h, const simd::KernelTable& kt) {
    const std::size_t n = h.rows();
    const std::size_t d = h.cols();
    std::vector<double> norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        norms[i] = std::sqrt(kt.dot(h.row(i).data(), h.row(i).data(), d));
    }
    Matrix sim(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (norms[i] == 0.0) {
            continue;
        }
        sim(i, i) = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (norms[j] == 0.0) {
                continue;
            }
            const double c = kt.dot(h.row(i).data(), h.row(j).data(), d) / (norms[i] * norms[j]);
            sim(i, j) = sim(j, i) = std::clamp(c, -1.0, 1.0);
        }
    }
    return sim;
}

std::vector<double> min_max_normalize(std::span<const double> x, double epsilon) {
    if (x.empty()) {
        throw ShapeError("min_max_normalize: empty input");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("min_max_normalize: epsilon must be positive");
    }
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    const double denom = (*hi - *lo) + epsilon;
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[i] = (x[i] - *lo) / denom;
    }
    return out;
}

Matrix rope_apply(const Matrix& x, const RopeParams& params, std::size_t start_position) {
    std::vector<std::size_t> positions(x.rows());
    for (std::size_t i = 0; i < positions.size(); ++i) {
        positions[i] = start_position + i;
    }
    return rope_apply(x, params, positions);
}

Matrix rope_apply(const Matrix& x, const RopeParams& params, std::span<const std::size_t> positions) {
    params.validate();
    if (x.cols() != params.head_dim) {
        throw ShapeError("rope_apply: row width " + std::to_string(x.cols()) + " but head_dim is " +
                         std::to_string(params.head_dim));
    }
    if (positions.size() != x.rows()) {
        throw ShapeError("rope_apply: position count does not match row count");
    }
    const std::size_t pairs = params.head_dim / 2;
    std::vector<double> inv_freq(pairs);
    for (std::size_t p = 0; p < pairs; ++p) {
        inv_freq[p] = std::pow(params.base, -2.0 * static_cast<double>(p) / static_cast<double>(params.head_dim));
    }
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        const auto in = x.row(r);
        auto dst = out.row(r);
        const double pos = static_cast<double>(positions[r]);
        for (std::size_t p = 0; p < pairs; ++p) {
            const double angle = pos * inv_freq[p];
            const double c = std::cos(angle);
            const double s = std::sin(angle);
            const double a = in[2 * p];
            const double b = in[2 * p + 1];
            dst[2 * p] = a * c - b * s;
            dst[2 * p + 1] = a * s + b * c;
        }
    }
    return out;
}

Matrix matmul(const Matrix& a, const Matrix& b, const simd::KernelTable& kt) {
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " times " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* ci = c.row(i).data();
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik != 0.0) {
                kt.axpy(aik, b.row(k).data(), ci, b.cols());
            }
        }
    }
    return c;
}

Matrix add(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeError("add: operand shapes differ");
    }
    Matrix c = a;
    auto dst = c.data();
    const auto src = b.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        dst[i] += src[i];
    }
    return c;
}

}  // namespace asap
