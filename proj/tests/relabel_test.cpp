#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ascl/membank.hpp"
#include "ascl/relabel.hpp"
#include "test_util.hpp"

using namespace ascl;
using ascl::testing::random_unit;
using ascl::testing::random_unit_rows;
using ascl::testing::random_vec;

namespace {

Vec random_similarities(std::size_t n, Rng& rng) {
    Vec d(n);
    for (double& x : d) {
        x = rng.uniform(-1.0, 1.0);
    }
    return d;
}

void expect_vec_near(const Vec& got, const Vec& want, double tol) {
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_NEAR(got[i], want[i], tol) << "index " << i;
    }
}

}  // namespace

TEST(OnehotLabel, Shapes) {
    EXPECT_EQ(onehot_label(3).weights, (Vec{1, 0, 0, 0}));
    EXPECT_EQ(onehot_label(0).weights, (Vec{1}));
    const Vec big = onehot_label(4096).weights;
    EXPECT_EQ(big.size(), 4097u);
    EXPECT_EQ(std::accumulate(big.begin(), big.end(), 0.0), 1.0);
    EXPECT_EQ(big[0], 1.0);
}

TEST(SimilarityRow, CopyAndOrthogonalEntries) {
    Mat bank(0, 3);
    bank.append_row(Vec{0, 1, 0});
    bank.append_row(Vec{1, 0, 0});
    const Vec d = similarity_row(Vec{1, 0, 0}, bank);
    EXPECT_EQ(d[0], 0.0);
    EXPECT_EQ(d[1], 1.0);
}

TEST(SimilarityRow, MatchesPairwiseCosine) {
    Rng rng(1);
    MemoryBank bank(8, 5);
    bank.enqueue_batch(random_unit_rows(3, 5, rng));
    const Vec t = random_unit(5, rng);
    const Vec d = similarity_row(t, bank);
    const Mat entries = bank.snapshot();
    ASSERT_EQ(d.size(), 3u);
    for (std::size_t j = 0; j < 3; ++j) {
        double num = 0, na = 0, nb = 0;
        for (std::size_t k = 0; k < 5; ++k) {
            num += t[k] * entries(j, k);
            na += t[k] * t[k];
            nb += entries(j, k) * entries(j, k);
        }
        EXPECT_NEAR(d[j], num / std::sqrt(na * nb), 1e-12);
    }
}

TEST(SimilarityRow, EmptyBankIsAnError) {
    MemoryBank bank(4, 2);
    EXPECT_ASCL_ERROR(similarity_row(Vec{1, 0}, bank), ErrorCode::EmptyBank);
}

TEST(RelativeDistribution, ConstantRowIsUniform) {
    for (double x : relative_distribution(Vec{0.3, 0.3, 0.3, 0.3}, 0.05)) {
        EXPECT_NEAR(x, 0.25, 1e-15);
    }
}

TEST(RelativeDistribution, DominantEntry) {
    const Vec q = relative_distribution(Vec{1, 0, 0, 0}, 0.05);
    EXPECT_GT(q[0], 0.999999);
    // 1 / (1 + 3 e^{-20})
    EXPECT_NEAR(q[0], 0.99999999381653917092, 1e-15);
}

TEST(LabelConfig, DefaultsMatchReferenceSetup) {
    const LabelConfig c;
    EXPECT_EQ(c.num_neighbors, 1u);
    EXPECT_EQ(c.sharpening_temperature, 0.05);
    EXPECT_EQ(c.strategy, LabelStrategy::Ascl);
}

TEST(Confidence, Limits) {
    EXPECT_EQ(confidence(Vec(7, 1.0 / 7.0)), 0.0);
    EXPECT_NEAR(confidence(Vec{1.0 - 1e-12, 1e-12}), 1.0, 1e-10);
    EXPECT_EQ(confidence(Vec{1.0, 0.0, 0.0}), 1.0);
}

TEST(Confidence, HandComputedValue) {
    // 1 - 1.5 ln 2 / ln 3
    EXPECT_NEAR(confidence(Vec{0.5, 0.25, 0.25}), 0.053605369642813844351, 1e-15);
}

TEST(Confidence, NeedsAtLeastTwoEntries) {
    EXPECT_ASCL_ERROR(confidence(Vec{1.0}), ErrorCode::InvalidArgument);
    EXPECT_EQ(row_confidence(Vec{0.4}, 0.05), 0.0);
    EXPECT_EQ(row_confidence(Vec{}, 0.05), 0.0);
}

TEST(ConfidenceProperty, AlwaysInUnitInterval) {
    Rng rng(2);
    for (int trial = 0; trial < 2000; ++trial) {
        const Vec d = random_similarities(2 + rng.below(200), rng);
        const double c = row_confidence(d, rng.uniform(1e-3, 1.0));
        ASSERT_GE(c, 0.0);
        ASSERT_LE(c, 1.0);
    }
}

TEST(ConfidenceProperty, SharperTemperatureNeverLowersConfidence) {
    Rng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec d = random_similarities(2 + rng.below(64), rng);
        const double t1 = rng.uniform(0.01, 1.0);
        const double t2 = t1 * rng.uniform(0.1, 1.0);
        ASSERT_GE(row_confidence(d, t2), row_confidence(d, t1) - 1e-12);
    }
}

TEST(HardLabel, KnownValues) {
    const Vec d{0.9, 0.1, 0.2};
    EXPECT_EQ(hard_label(d, 0).weights, onehot_label(3).weights);
    expect_vec_near(hard_label(d, 1).weights, {0.5, 0.5, 0, 0}, 1e-15);
    expect_vec_near(hard_label(d, 2).weights, {1.0 / 3, 1.0 / 3, 0, 1.0 / 3}, 1e-15);
}

TEST(HardLabel, KClampedToOccupancy) {
    expect_vec_near(hard_label(Vec{0.2, -0.1}, 10).weights, {1.0 / 3, 1.0 / 3, 1.0 / 3}, 1e-15);
}

TEST(AhclLabel, UniformRowGivesOnehot) {
    for (std::size_t k : {0, 1, 3}) {
        EXPECT_EQ(ahcl_label(Vec{0.2, 0.2, 0.2, 0.2}, k, 0.05).weights, onehot_label(4).weights);
    }
}

TEST(AhclLabel, FullConfidenceIsHard) {
    Rng rng(4);
    const Vec d = random_similarities(10, rng);
    EXPECT_EQ(ahcl_label_with_confidence(d, 3, 1.0).weights, hard_label(d, 3).weights);
    EXPECT_EQ(ahcl_label_with_confidence(d, 3, 0.0).weights, onehot_label(10).weights);
}

TEST(AhclLabel, TwoEntryOracle) {
    // q = softmax([1, -1] / 0.05), c from the entropy of q, weights [1, c, 0] normalized.
    expect_vec_near(ahcl_label(Vec{1, -1}, 1, 0.05).weights,
                    {0.50000000000000006282, 0.49999999999999993718, 0.0}, 1e-12);
}

TEST(AsclLabel, KZeroAndUniformRowGiveOnehot) {
    Rng rng(5);
    const Vec d = random_similarities(16, rng);
    EXPECT_EQ(ascl_label(d, 0, 0.05).weights, onehot_label(16).weights);
    EXPECT_EQ(ascl_label(Vec(6, 0.1), 2, 0.05).weights, onehot_label(6).weights);
}

TEST(AsclLabel, DominantEntryOracle) {
    const Vec d{0.8, 0.3, -0.2, 0.1};
    expect_vec_near(ascl_label(d, 1, 0.05).weights,
                    {0.50009233020512213814, 0.49988455837233301589,
                     0.000022694723839454677761, 1.0303388682902329065e-9,
                     4.1566836652299878373e-7},
                    1e-12);
    // K=2 saturates the dominant entry at the unit cap.
    expect_vec_near(ascl_label(d, 2, 0.05).weights,
                    {0.49997689391226390857, 0.49997689391226390857,
                     0.000045378970434491736173, 2.0602020704198015079e-9,
                     8.311448356206954454e-7},
                    1e-12);
    expect_vec_near(ascl_label(d, 5, 0.05).weights,
                    {0.49994223878456690606, 0.49994223878456690606,
                     0.0001134395626527671444, 5.1501481767226280968e-9,
                     2.0777180652440194422e-6},
                    1e-12);
}

TEST(AsclLabel, UsesEveryBankEntry) {
    const Vec w = ascl_raw_weights(Vec{0.5, 0.4, 0.3, 0.2}, 1, 0.5);
    for (std::size_t j = 1; j < w.size(); ++j) {
        EXPECT_GT(w[j], 0.0);
    }
}

TEST(NormalizeLabel, KnownValues) {
    expect_vec_near(normalize_label({{1, 1, 0, 0}}).weights, {0.5, 0.5, 0, 0}, 0.0);
    const Vec already{0.25, 0.5, 0.25};
    EXPECT_EQ(normalize_label({already}).weights, already);
    expect_vec_near(normalize_label({{1, 0.3, 0.2}}).weights, {2.0 / 3, 0.2, 2.0 / 15}, 1e-15);
}

TEST(NormalizeLabel, RejectsInvalidWeights) {
    EXPECT_ASCL_ERROR(normalize_label({{0, 0}}), ErrorCode::InvalidLabel);
    EXPECT_ASCL_ERROR(normalize_label({{1, -0.1}}), ErrorCode::InvalidLabel);
}

TEST(LabelProperty, EveryStrategyIsAValidLabel) {
    Rng rng(6);
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec d = random_similarities(rng.below(100), rng);
        LabelConfig config;
        config.strategy = static_cast<LabelStrategy>(rng.below(4));
        config.num_neighbors = rng.below(8);
        config.sharpening_temperature = rng.uniform(0.01, 0.5);
        const Vec w = make_label(config, d).weights;
        ASSERT_EQ(w.size(), d.size() + 1);
        double total = 0.0;
        for (double x : w) {
            ASSERT_GE(x, 0.0);
            total += x;
        }
        ASSERT_NEAR(total, 1.0, 1e-12);
        ASSERT_GT(w[0], 0.0);
    }
}

TEST(LabelProperty, KZeroEqualsOnehotExactly) {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec d = random_similarities(rng.below(50), rng);
        const double tp = rng.uniform(0.01, 0.5);
        ASSERT_EQ(ascl_label(d, 0, tp).weights, onehot_label(d.size()).weights);
        ASSERT_EQ(ahcl_label(d, 0, tp).weights, onehot_label(d.size()).weights);
    }
}

TEST(LabelProperty, AsclRawWeightsCappedAtOne) {
    Rng rng(8);
    for (int trial = 0; trial < 1000; ++trial) {
        const Vec d = random_similarities(2 + rng.below(50), rng);
        const Vec w = ascl_raw_weights(d, 1 + rng.below(20), rng.uniform(0.001, 0.5));
        ASSERT_EQ(w[0], 1.0);
        for (std::size_t j = 1; j < w.size(); ++j) {
            ASSERT_LE(w[j], 1.0);
        }
    }
}

TEST(LabelProperty, AsclIsPermutationEquivariant) {
    Rng rng(9);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 2 + rng.below(30);
        const Vec d = random_similarities(n, rng);
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        Vec pd(n);
        for (std::size_t j = 0; j < n; ++j) {
            pd[j] = d[perm[j]];
        }
        const std::size_t k = rng.below(5);
        const Vec w = ascl_label(d, k, 0.05).weights;
        const Vec pw = ascl_label(pd, k, 0.05).weights;
        ASSERT_NEAR(pw[0], w[0], 1e-12);
        for (std::size_t j = 0; j < n; ++j) {
            ASSERT_NEAR(pw[j + 1], w[perm[j] + 1], 1e-12);
        }
    }
}

TEST(ByolInbatchLabels, OrthogonalBatchIsOnehot) {
    Mat t(0, 4);
    t.append_row(Vec{1, 0, 0, 0});
    t.append_row(Vec{0, 1, 0, 0});
    t.append_row(Vec{0, 0, 1, 0});
    t.append_row(Vec{0, 0, 0, 1});
    const auto labels = byol_inbatch_labels(t, 3, 0.05);
    for (std::size_t i = 0; i < 4; ++i) {
        Vec want(4, 0.0);
        want[i] = 1.0;
        EXPECT_EQ(labels[i].weights, want);
    }
}

TEST(ByolInbatchLabels, KZeroIsOnehot) {
    Rng rng(10);
    const auto labels = byol_inbatch_labels(random_unit_rows(6, 4, rng), 0, 0.05);
    for (std::size_t i = 0; i < 6; ++i) {
        Vec want(6, 0.0);
        want[i] = 1.0;
        EXPECT_EQ(labels[i].weights, want);
    }
}

TEST(ByolInbatchLabels, FourSampleOracle) {
    Mat t(0, 3);
    t.append_row(l2_normalize(Vec{1, 0, 0}));
    t.append_row(l2_normalize(Vec{1, 1, 0}));
    t.append_row(l2_normalize(Vec{0, 1, 1}));
    t.append_row(l2_normalize(Vec{-1, 0.5, 2}));
    const auto labels = byol_inbatch_labels(t, 2, 0.05);
    expect_vec_near(labels[0].weights,
                    {0.49999963926864877188, 0.49999963926864877188, 7.2134593802524718276e-7,
                     1.1676443099286540992e-10},
                    1e-10);
    expect_vec_near(labels[1].weights,
                    {0.49285669863957930458, 0.49285669863957930458, 0.014286573091542171436,
                     2.9629299219402240478e-8},
                    1e-10);
    expect_vec_near(labels[2].weights,
                    {1.9218113031413878291e-7, 0.0042330710932716700685, 0.4978833683627990079,
                     0.4978833683627990079},
                    1e-10);
    expect_vec_near(labels[3].weights,
                    {3.2200124850048883599e-11, 9.0871712041100862891e-9,
                     0.49999999544031433552, 0.49999999544031433552},
                    1e-10);
    const Vec c = byol_inbatch_confidences(t, 0.05);
    EXPECT_NEAR(c[1], 0.92668103388753976838, 1e-10);
    EXPECT_NEAR(c[2], 0.97445394326865901051, 1e-10);
}

TEST(ByolInbatchLabels, NeedsThreeSamples) {
    Rng rng(11);
    EXPECT_ASCL_ERROR(byol_inbatch_labels(random_unit_rows(2, 3, rng), 1, 0.05),
                      ErrorCode::InvalidArgument);
}
