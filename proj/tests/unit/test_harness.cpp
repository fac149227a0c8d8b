// Copyright 2026 The asap-prune Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "asap/cost_model.hpp"
#include "asap/errors.hpp"
#include "asap/harness.hpp"
#include "oracles.hpp"

using namespace asap;
using namespace asap::harness;

namespace {

ToyDecoderConfig small_config(std::uint64_t seed) {
    ToyDecoderConfig cfg;
    cfg.seed = seed;
    return cfg;
}

GeneratedSequence small_sequence(std::uint64_t seed, std::size_t visual = 32) {
    LayoutSpec spec;
    spec.visual = visual;
    return generate_sequence(spec, seed);
}

Matrix rows_of(const Matrix& m, std::size_t begin, std::size_t end) {
    std::vector<std::size_t> idx;
    for (std::size_t i = begin; i < end; ++i) {
        idx.push_back(i);
    }
    return m.gather_rows(idx);
}

}  // namespace

TEST(GenerateSequence, DeterministicAndSeedSensitive) {
    LayoutSpec spec;
    spec.visual = 16;
    const auto a = generate_sequence(spec, 3);
    const auto b = generate_sequence(spec, 3);
    const auto c = generate_sequence(spec, 4);
    EXPECT_EQ(a.hidden, b.hidden);
    EXPECT_NE(a.hidden, c.hidden);
    EXPECT_EQ(a.layout.visual.size(), 16u);
    EXPECT_EQ(a.hidden.rows(), 4u + 16u + 8u);
}

TEST(ToyDecoder, ConfigValidation) {
    ToyDecoderConfig cfg;
    cfg.prune_layer = 4;
    EXPECT_THROW(ToyDecoder{cfg}, ConfigError);
    cfg = ToyDecoderConfig{};
    cfg.head_dim = 7;
    EXPECT_THROW(ToyDecoder{cfg}, ConfigError);
}

TEST(ToyDecoder, PlainForwardKeepsLength) {
    const ToyDecoder dec(small_config(1));
    const auto seq = small_sequence(2);
    const ForwardResult r = dec.forward(seq.hidden, seq.layout);
    EXPECT_EQ(r.hidden.rows(), seq.hidden.rows());
    EXPECT_FALSE(r.prune.has_value());
    for (std::size_t l = 0; l < 4; ++l) {
        EXPECT_EQ(r.cache.rows(l), seq.hidden.rows());
    }
    EXPECT_EQ(dec.forward(seq.hidden, seq.layout).hidden, r.hidden);
}

TEST(ToyDecoder, MacsMatchCostModel) {
    const ToyDecoder dec(small_config(1));
    const auto seq = small_sequence(2);
    const ForwardResult r = dec.forward(seq.hidden, seq.layout);
    const cost::ModelConfig m{64, 64, 4, seq.hidden.rows(), 2};
    for (std::uint64_t macs : r.layer_macs) {
        EXPECT_EQ(macs, cost::layer_flops(seq.hidden.rows(), m));
    }
}

TEST(ToyDecoder, NoOpPruneIsBitIdentical) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ToyDecoder dec(small_config(seed));
        const auto seq = small_sequence(seed + 100);
        PruneConfig p;
        p.budget_k = seq.layout.visual.size();
        p.similarity_threshold = 1.0;
        const ForwardResult plain = dec.forward(seq.hidden, seq.layout);
        const ForwardResult pruned = dec.forward(seq.hidden, seq.layout, p);
        EXPECT_EQ(plain.hidden, pruned.hidden);
        EXPECT_EQ(plain.positions, pruned.positions);
    }
}

TEST(ToyDecoder, PrunedCacheRowsAndPositions) {
    const ToyDecoder dec(small_config(7));
    const auto seq = small_sequence(8, 32);
    PruneConfig p;
    p.budget_k = 8;
    const ForwardResult r = dec.forward(seq.hidden, seq.layout, p);
    ASSERT_TRUE(r.prune.has_value());
    const std::size_t expect_rows = r.prune->result.kept_indices.size() + 4 + 8;
    EXPECT_EQ(r.prune->result.kept_indices.size() + r.prune->result.shortfall, 8u);
    for (std::size_t l = 0; l <= 2; ++l) {
        EXPECT_EQ(r.cache.rows(l), seq.hidden.rows());
    }
    EXPECT_EQ(r.cache.rows(3), expect_rows);
    EXPECT_EQ(r.hidden.rows(), expect_rows);

    std::vector<std::size_t> expected_positions;
    for (std::size_t i = 0; i < 4; ++i) {
        expected_positions.push_back(i);
    }
    for (std::size_t k : r.prune->result.kept_indices) {
        expected_positions.push_back(k);
    }
    for (std::size_t i = 36; i < 44; ++i) {
        expected_positions.push_back(i);
    }
    EXPECT_EQ(r.cache.layers[3].positions, expected_positions);
    EXPECT_EQ(r.positions, expected_positions);
    EXPECT_TRUE(std::is_sorted(expected_positions.begin(), expected_positions.end()));
}

TEST(ToyDecoder, MultiturnMatchesRecompute) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const ToyDecoder dec(small_config(seed));
        const auto seq = small_sequence(seed + 50, 16);
        const std::size_t n = seq.hidden.rows();
        const std::size_t first_turn = n - 5;
        const auto first_layout = SequenceLayout::from_lengths(4, 16, first_turn - 20);
        ForwardResult partial = dec.forward(rows_of(seq.hidden, 0, first_turn), first_layout);
        const Matrix step_a = dec.step(partial.cache, rows_of(seq.hidden, first_turn, n - 2));
        const Matrix step_b = dec.step(partial.cache, rows_of(seq.hidden, n - 2, n));
        const ForwardResult full = dec.forward(seq.hidden, seq.layout);
        for (std::size_t c = 0; c < full.hidden.cols(); ++c) {
            for (std::size_t i = 0; i < 3; ++i) {
                EXPECT_NEAR(step_a(i, c), full.hidden(first_turn + i, c), 1e-5);
            }
            for (std::size_t i = 0; i < 2; ++i) {
                EXPECT_NEAR(step_b(i, c), full.hidden(n - 2 + i, c), 1e-5);
            }
        }
        EXPECT_EQ(partial.cache.rows(0), n);
    }
}

TEST(ToyDecoder, StepEdgeCases) {
    ToyDecoderConfig cfg = small_config(3);
    cfg.max_positions = 46;
    const ToyDecoder dec(cfg);
    const auto seq = small_sequence(4);
    ForwardResult r = dec.forward(seq.hidden, seq.layout);
    const KvCache before = r.cache;

    const Matrix none = dec.step(r.cache, Matrix(0, 64));
    EXPECT_EQ(none.rows(), 0u);
    EXPECT_EQ(r.cache.rows(0), before.rows(0));

    std::mt19937_64 rng(1);
    const Matrix one = dec.step(r.cache, oracle::random_matrix(1, 64, rng));
    EXPECT_EQ(one.rows(), 1u);
    for (std::size_t l = 0; l < 4; ++l) {
        EXPECT_EQ(r.cache.rows(l), before.rows(l) + 1);
        EXPECT_EQ(r.cache.layers[l].positions.back(), 44u);
    }

    // Positions 45 and 46 would be needed; 46 is out of range.
    const KvCache snapshot = r.cache;
    EXPECT_THROW(dec.step(r.cache, oracle::random_matrix(2, 64, rng)), ConfigError);
    EXPECT_EQ(r.cache.rows(0), snapshot.rows(0));
    EXPECT_THROW(dec.step(r.cache, Matrix(1, 3)), ShapeError);
}

TEST(ToyDecoder, StepAfterPruningUsesOriginalPositions) {
    const ToyDecoder dec(small_config(9));
    const auto seq = small_sequence(10);
    PruneConfig p;
    p.budget_k = 8;
    ForwardResult r = dec.forward(seq.hidden, seq.layout, p);
    std::mt19937_64 rng(2);
    dec.step(r.cache, oracle::random_matrix(2, 64, rng));
    EXPECT_EQ(r.cache.last_position(), seq.hidden.rows() + 1);
}

TEST(RopeDecay, DistanceZeroAndDeterminism) {
    const std::vector<std::size_t> d{0, 1, 16, 512};
    RopeDecayConfig cfg;
    cfg.draws = 1000;
    const auto a = rope_decay_demo(11, d, cfg);
    const auto b = rope_decay_demo(11, d, cfg);
    ASSERT_EQ(a.size(), 4u);
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(a[i].mean_score, b[i].mean_score);
    }
    EXPECT_NEAR(a[0].mean_score, 1.0, 1e-12);
    EXPECT_GT(a[0].mean_score, a[3].mean_score);
    EXPECT_THROW(rope_decay_demo(1, std::vector<std::size_t>{}, cfg), ConfigError);
}

TEST(RopeDecay, UntiedDistanceZeroIsRawDot) {
    RopeDecayConfig cfg;
    cfg.tied_qk = false;
    cfg.draws = 1;
    cfg.head_dim = 8;
    const std::vector<std::size_t> d{0};
    const auto rows = rope_decay_demo(5, d, cfg);
    EXPECT_LE(std::abs(rows[0].mean_score), 1.0);
    EXPECT_EQ(rows[0].mean_abs_score, std::abs(rows[0].mean_score));
}
