// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "asap/errors.hpp"
#include "asap/graymap.hpp"
#include "asap/masking.hpp"
#include "asap/numerics.hpp"
#include "oracles.hpp"

using namespace asap;

namespace {

SalienceProfile flat_salience(std::size_t n, double value) {
    return SalienceProfile{std::vector<double>(n, 0.0), std::vector<double>(n, value)};
}

}  // namespace

TEST(CausalMask, SmallCases) {
    EXPECT_EQ(build_causal_mask(1), Matrix{{0.0}});
    const Matrix m2 = build_causal_mask(2);
    EXPECT_EQ(m2(0, 0), 0.0);
    EXPECT_TRUE(is_masked(m2(0, 1)));
    EXPECT_EQ(m2(1, 0), 0.0);
    EXPECT_EQ(m2(1, 1), 0.0);
    EXPECT_THROW(build_causal_mask(0), ShapeError);
}

TEST(CausalMask, SentinelCount) {
    for (std::size_t n : {1u, 2u, 5u, 9u}) {
        const Matrix m = build_causal_mask(n);
        const auto count = std::count_if(m.data().begin(), m.data().end(), is_masked);
        EXPECT_EQ(static_cast<std::size_t>(count), n * (n - 1) / 2);
    }
}

TEST(Layout, FromLengthsAndValidation) {
    const auto l = SequenceLayout::from_lengths(2, 3, 4);
    EXPECT_EQ(l.system, (Span{0, 2}));
    EXPECT_EQ(l.visual, (Span{2, 5}));
    EXPECT_EQ(l.text, (Span{5, 9}));
    EXPECT_EQ(l.total_len(), 9u);
    SequenceLayout bad = l;
    bad.text.begin = 6;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(AttentionMass, ZerosAndSingleton) {
    const auto l = SequenceLayout::from_lengths(1, 3, 1);
    for (double s : attention_mass(Matrix(5, 5), l)) {
        EXPECT_EQ(s, 0.0);
    }
    std::mt19937_64 rng(2);
    const Matrix w = oracle::random_matrix(4, 4, rng);
    const auto single = attention_mass(w, SequenceLayout::from_lengths(2, 1, 1));
    ASSERT_EQ(single.size(), 1u);
    EXPECT_EQ(single[0], w(2, 2));
}

TEST(AttentionMass, MatchesDoubleLoopIncludingUpperTriangle) {
    std::mt19937_64 rng(6);
    const Matrix w = oracle::random_matrix(6, 6, rng);
    const auto l = SequenceLayout::from_lengths(1, 3, 2);
    const auto s = attention_mass(w, l);
    const auto expect = oracle::attention_mass(oracle::to_grid(w), 1, 4);
    for (std::size_t j = 0; j < 3; ++j) {
        EXPECT_NEAR(s[j], expect[j], 1e-12);
    }
}

TEST(AttentionMass, Errors) {
    EXPECT_THROW(attention_mass(Matrix(4, 4), SequenceLayout::from_lengths(2, 0, 2)), ConfigError);
    EXPECT_THROW(attention_mass(Matrix(4, 5), SequenceLayout::from_lengths(1, 2, 1)), ShapeError);
}

TEST(Salience, EqualMassesNormalizeToZero) {
    const auto p = compute_salience(Matrix(4, 4, 1.0), SequenceLayout::from_lengths(0, 4, 0));
    for (double v : p.normalized) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Salience, TwoTokenFormula) {
    // Visual rows {0,1}: column masses 0 and 10.
    const Matrix w{{0, 4}, {0, 6}};
    const auto p = compute_salience(w, SequenceLayout::from_lengths(0, 2, 0), 1e-6);
    EXPECT_EQ(p.raw_mass[0], 0.0);
    EXPECT_EQ(p.raw_mass[1], 10.0);
    EXPECT_EQ(p.normalized[0], 0.0);
    EXPECT_DOUBLE_EQ(p.normalized[1], 10.0 / (10.0 + 1e-6));
}

TEST(Salience, RankPreservingAndShiftInvariant) {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> cdist(-20.0, 20.0);
    const auto l = SequenceLayout::from_lengths(2, 10, 3);
    for (int trial = 0; trial < 50; ++trial) {
        Matrix w = oracle::random_matrix(15, 15, rng);
        const auto p = compute_salience(w, l);
        for (std::size_t a = 0; a < 10; ++a) {
            for (std::size_t b = 0; b < 10; ++b) {
                if (p.raw_mass[a] < p.raw_mass[b]) {
                    EXPECT_LE(p.normalized[a], p.normalized[b]);
                }
            }
        }
        // Shifting every visual-row entry by c shifts each mass by |visual| * c.
        const double c = std::round(cdist(rng));
        for (std::size_t i = l.visual.begin; i < l.visual.end; ++i) {
            for (double& v : w.row(i)) {
                v += c;
            }
        }
        const auto q = compute_salience(w, l);
        for (std::size_t j = 0; j < 10; ++j) {
            EXPECT_NEAR(q.raw_mass[j], p.raw_mass[j] + 10.0 * c, 1e-9);
            EXPECT_NEAR(q.normalized[j], p.normalized[j], 1e-9);
        }
    }
}

TEST(BidirectionalMask, ZeroSalienceHitsEpsilonFloor) {
    const auto l = SequenceLayout::from_lengths(1, 4, 2);
    const Matrix m = build_bidirectional_mask(flat_salience(4, 0.0), l, MaskConfig{0.5, 1e-6});
    for (std::size_t i = 1; i < 5; ++i) {
        for (std::size_t j = i + 1; j < 5; ++j) {
            EXPECT_NEAR(m(i, j), std::log(1e-6), 1e-12);
            EXPECT_NEAR(m(i, j), -13.8155, 1e-4);
        }
    }
}

TEST(BidirectionalMask, FullSalienceFullVisibility) {
    const auto l = SequenceLayout::from_lengths(0, 4, 1);
    const Matrix m = build_bidirectional_mask(flat_salience(4, 1.0), l, MaskConfig{1.0, 1e-6});
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = i + 1; j < 4; ++j) {
            EXPECT_EQ(m(i, j), 0.0);
        }
    }
}

TEST(BidirectionalMask, HalfLambdaHalfSalience) {
    const auto l = SequenceLayout::from_lengths(0, 3, 0);
    const Matrix m = build_bidirectional_mask(flat_salience(3, 0.5), l, MaskConfig{0.5, 1e-6});
    EXPECT_NEAR(m(0, 2), std::log(0.25), 1e-15);
    EXPECT_NEAR(m(0, 2), -1.3863, 1e-4);
}

TEST(BidirectionalMask, CausalOutsideVisualBlock) {
    const auto l = SequenceLayout::from_lengths(2, 3, 2);
    const Matrix m = build_bidirectional_mask(flat_salience(3, 1.0), l, MaskConfig{1.0, 1e-6});
    for (std::size_t i = 0; i < 7; ++i) {
        for (std::size_t j = 0; j < 7; ++j) {
            const bool both_visual = l.visual.contains(i) && l.visual.contains(j);
            if (i >= j) {
                EXPECT_EQ(m(i, j), 0.0);
            } else if (both_visual) {
                EXPECT_EQ(m(i, j), 0.0);
            } else {
                EXPECT_TRUE(is_masked(m(i, j))) << i << "," << j;
            }
        }
    }
}

TEST(BidirectionalMask, LambdaOutOfRange) {
    const auto l = SequenceLayout::from_lengths(0, 2, 0);
    EXPECT_THROW(build_bidirectional_mask(flat_salience(2, 1.0), l, MaskConfig{0.0, 1e-6}), ConfigError);
    EXPECT_THROW(build_bidirectional_mask(flat_salience(2, 1.0), l, MaskConfig{1.5, 1e-6}), ConfigError);
    EXPECT_THROW(build_bidirectional_mask(flat_salience(3, 1.0), l, MaskConfig{}), ShapeError);
}

TEST(MaskedAttention, UniformCausal) {
    const Matrix a = masked_attention(Matrix(4, 4), build_causal_mask(4));
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t j = 0; j < 4; ++j) {
            EXPECT_NEAR(a(i, j), j <= i ? 1.0 / static_cast<double>(i + 1) : 0.0, 1e-15);
        }
    }
}

TEST(MaskedAttention, OpenVisualSpanIsUniformOverSpan) {
    const auto l = SequenceLayout::from_lengths(1, 4, 2);
    const Matrix mask = build_bidirectional_mask(flat_salience(4, 1.0), l, MaskConfig{1.0, 1e-6});
    const Matrix a = masked_attention(Matrix(7, 7), mask);
    // Visual row i sees the system token plus all four visual tokens.
    for (std::size_t i = 1; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            EXPECT_NEAR(a(i, j), 0.2, 1e-15);
        }
        EXPECT_EQ(a(i, 5), 0.0);
        EXPECT_EQ(a(i, 6), 0.0);
    }
}

TEST(MaskedAttention, ExponentRuleOnUnnormalizedWeights) {
    std::mt19937_64 rng(41);
    const auto l = SequenceLayout::from_lengths(2, 8, 3);
    const std::size_t n = l.total_len();
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix w = oracle::random_matrix(n, n, rng);
        const auto sal = compute_salience(w, l);
        const MaskConfig cfg{0.7, 1e-6};
        const Matrix mask = build_bidirectional_mask(sal, l, cfg);
        const Matrix a = masked_attention(w, mask);
        for (std::size_t i = l.visual.begin; i < l.visual.end; ++i) {
            // Unnormalized weights share one row normalizer, so ratios to the diagonal cancel it.
            for (std::size_t j = i + 1; j < l.visual.end; ++j) {
                const double lambda = std::max(cfg.lambda_max * sal.normalized[j - l.visual.begin], cfg.epsilon);
                const double expect = lambda * std::exp(w(i, j)) / std::exp(w(i, i));
                EXPECT_NEAR(a(i, j) / a(i, i), expect, 1e-6 * expect);
            }
        }
    }
}

TEST(MaskedAttention, RowsSumToOneAndTextStaysCausal) {
    std::mt19937_64 rng(42);
    const auto l = SequenceLayout::from_lengths(3, 10, 4);
    const std::size_t n = l.total_len();
    const Matrix w = oracle::random_matrix(n, n, rng);
    const auto sal = compute_salience(w, l);
    for (const Matrix& mask : {build_causal_mask(n), build_bidirectional_mask(sal, l, MaskConfig{})}) {
        const Matrix a = masked_attention(w, mask);
        for (std::size_t i = 0; i < n; ++i) {
            double total = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                total += a(i, j);
                if (!l.visual.contains(i) && j > i) {
                    EXPECT_EQ(a(i, j), 0.0);
                }
            }
            EXPECT_NEAR(total, 1.0, 1e-6);
        }
    }
}

TEST(MaskedAttention, ConvergesToCausalAsEpsilonVanishes) {
    std::mt19937_64 rng(43);
    const auto l = SequenceLayout::from_lengths(2, 24, 6);
    const std::size_t n = l.total_len();
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix w = oracle::random_matrix(n, n, rng);
        const Matrix causal = masked_attention(w, build_causal_mask(n));
        const Matrix bidir = masked_attention(w, build_bidirectional_mask(flat_salience(24, 0.0), l, {0.5, 1e-12}));
        double worst = 0.0;
        for (std::size_t i = 0; i < causal.size(); ++i) {
            worst = std::max(worst, std::abs(causal.data()[i] - bidir.data()[i]));
        }
        EXPECT_LT(worst, 1e-4);
    }
}

TEST(MaskedAttention, HigherSalienceNeverLowersForwardWeight) {
    std::mt19937_64 rng(44);
    const auto l = SequenceLayout::from_lengths(1, 6, 2);
    const std::size_t n = l.total_len();
    const Matrix w = oracle::random_matrix(n, n, rng);
    SalienceProfile sal = flat_salience(6, 0.3);
    const Matrix before = masked_attention(w, build_bidirectional_mask(sal, l, MaskConfig{}));
    sal.normalized[4] = 0.9;
    const Matrix after = masked_attention(w, build_bidirectional_mask(sal, l, MaskConfig{}));
    const std::size_t j = l.visual.begin + 4;
    for (std::size_t i = l.visual.begin; i < j; ++i) {
        EXPECT_GE(after(i, j), before(i, j));
    }
    EXPECT_THROW(masked_attention(Matrix(2, 2), Matrix(3, 3)), ShapeError);
}

TEST(HeadAggregation, MeanSumSingle) {
    const std::vector<Matrix> heads{Matrix{{1, 2}}, Matrix{{3, 6}}};
    EXPECT_EQ(aggregate_heads(heads, HeadAggregation::mean), (Matrix{{2, 4}}));
    EXPECT_EQ(aggregate_heads(heads, HeadAggregation::sum), (Matrix{{4, 8}}));
    EXPECT_EQ(aggregate_heads(heads, HeadAggregation::single, 1), heads[1]);
    EXPECT_THROW(aggregate_heads(heads, HeadAggregation::single, 2), ConfigError);
}

TEST(PenaltyGraymap, ScalesBetweenFloorAndOpen) {
    SalienceProfile sal = flat_salience(4, 0.0);
    sal.normalized = {0.0, 1.0, 0.5, 1.0};
    std::ostringstream out;
    write_penalty_graymap(out, sal, MaskConfig{1.0, 1e-6}, 2, 2);
    std::istringstream in(out.str());
    const Graymap g = read_graymap(in);
    EXPECT_EQ(g.rows, 2u);
    EXPECT_EQ(g.cols, 2u);
    EXPECT_EQ(g.pixels[0], 0);
    EXPECT_EQ(g.pixels[1], 255);
    EXPECT_EQ(g.pixels[2], static_cast<int>(std::lround(255.0 * (1.0 - std::log(0.5) / std::log(1e-6)))));
    std::ostringstream bad;
    EXPECT_THROW(write_penalty_graymap(bad, sal, MaskConfig{}, 3, 2), ShapeError);
}
