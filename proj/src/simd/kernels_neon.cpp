// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include "kernels_impl.hpp"

#if ASAP_SIMD_NEON

#include <arm_neon.h>

namespace asap::simd::detail {

double dot_neon(const double* a, const double* b, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
    }
    double acc = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) {
        y[i] += alpha * x[i];
    }
}

void scale_neon(double alpha, double* x, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_n_f64(vld1q_f64(x + i), alpha));
    }
    for (; i < n; ++i) {
        x[i] *= alpha;
    }
}

double sum_neon(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vaddq_f64(acc, vld1q_f64(x + i));
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        s += x[i];
    }
    return s;
}

double max_neon(const double* x, std::size_t n) {
    if (n < 2) {
        return max_scalar(x, n);
    }
    float64x2_t m = vld1q_f64(x);
    std::size_t i = 2;
    for (; i + 2 <= n; i += 2) {
        m = vmaxq_f64(m, vld1q_f64(x + i));
    }
    double best = vmaxvq_f64(m);
    for (; i < n; ++i) {
        best = x[i] > best ? x[i] : best;
    }
    return best;
}

}  // namespace asap::simd::detail

#endif  // ASAP_SIMD_NEON
