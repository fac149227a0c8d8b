// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

// Every vector backend available on this machine must agree with the scalar
// reference, kernel by kernel and through the operations built on them.

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "asap/numerics.hpp"
#include "asap/simd.hpp"
#include "oracles.hpp"

using namespace asap;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng) {
    std::normal_distribution<double> d(0.0, 3.0);
    std::vector<double> v(n);
    for (double& x : v) {
        x = d(rng);
    }
    return v;
}

void expect_close(const Matrix& a, const Matrix& b, double tol) {
    ASSERT_EQ(a.rows(), b.rows());
    ASSERT_EQ(a.cols(), b.cols());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_NEAR(a.data()[i], b.data()[i], tol) << "entry " << i;
    }
}

}  // namespace

TEST(Simd, ScalarAlwaysAvailable) {
    const auto backends = simd::available_backends();
    ASSERT_FALSE(backends.empty());
    EXPECT_EQ(backends.front(), simd::Backend::scalar);
    EXPECT_NE(simd::kernels_for(simd::active().backend), nullptr);
}

class BackendEquivalence : public ::testing::TestWithParam<simd::Backend> {};

TEST_P(BackendEquivalence, KernelsMatchScalar) {
    const simd::KernelTable* kt = simd::kernels_for(GetParam());
    if (kt == nullptr) {
        GTEST_SKIP() << "backend not available on this CPU";
    }
    const auto& ref = simd::scalar_kernels();
    std::mt19937_64 rng(17);
    for (std::size_t n = 0; n <= 67; ++n) {
        const auto a = random_vec(n, rng);
        const auto b = random_vec(n, rng);
        const double tol = 1e-12 * (1.0 + static_cast<double>(n));
        EXPECT_NEAR(kt->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n), tol) << "n=" << n;
        EXPECT_NEAR(kt->sum(a.data(), n), ref.sum(a.data(), n), tol) << "n=" << n;

        auto y1 = b;
        auto y2 = b;
        kt->axpy(0.37, a.data(), y1.data(), n);
        ref.axpy(0.37, a.data(), y2.data(), n);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(y1[i], y2[i], 1e-14);
        }

        auto s1 = a;
        auto s2 = a;
        kt->scale(-1.5, s1.data(), n);
        ref.scale(-1.5, s2.data(), n);
        EXPECT_EQ(s1, s2);

        if (n > 0) {
            EXPECT_EQ(kt->max(a.data(), n), ref.max(a.data(), n));
        }
    }
}

TEST_P(BackendEquivalence, MaxHandlesMaskedEntries) {
    const simd::KernelTable* kt = simd::kernels_for(GetParam());
    if (kt == nullptr) {
        GTEST_SKIP() << "backend not available on this CPU";
    }
    std::vector<double> v(13, kMasked);
    EXPECT_EQ(kt->max(v.data(), v.size()), kMasked);
    v[11] = -3.0;
    EXPECT_EQ(kt->max(v.data(), v.size()), -3.0);
}

TEST_P(BackendEquivalence, OperationsMatchScalar) {
    const simd::KernelTable* kt = simd::kernels_for(GetParam());
    if (kt == nullptr) {
        GTEST_SKIP() << "backend not available on this CPU";
    }
    const auto& ref = simd::scalar_kernels();
    std::mt19937_64 rng(23);
    const Matrix q = oracle::random_matrix(19, 13, rng);
    const Matrix k = oracle::random_matrix(19, 13, rng);
    expect_close(scaled_alignment(q, k, *kt), scaled_alignment(q, k, ref), 1e-12);
    expect_close(cosine_similarity(q, *kt), cosine_similarity(q, ref), 1e-12);
    expect_close(matmul(q, k.transposed(), *kt), matmul(q, k.transposed(), ref), 1e-11);

    Matrix logits = scaled_alignment(q, k, ref);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (std::size_t j = i + 1; j < logits.cols(); ++j) {
            logits(i, j) = kMasked;
        }
    }
    const Matrix a = softmax_rows(logits, *kt);
    const Matrix b = softmax_rows(logits, ref);
    expect_close(a, b, 1e-14);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t j = i + 1; j < a.cols(); ++j) {
            EXPECT_EQ(a(i, j), 0.0);
        }
    }
}

INSTANTIATE_TEST_SUITE_P(AllBackends, BackendEquivalence,
                         ::testing::Values(simd::Backend::scalar, simd::Backend::avx2, simd::Backend::neon),
                         [](const auto& info) { return std::string(simd::to_string(info.param)); });
