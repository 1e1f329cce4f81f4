#include "cte/consistency.hpp"
#include "cte/errors.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace cte;
using namespace cte::consistency;
using cte::testing::argmax_labels;
using cte::testing::random_labels;
using cte::testing::random_probs;

namespace {

LabelMap row(std::vector<std::uint32_t> v) {
    const std::size_t n = v.size();
    return LabelMap(1, n, std::move(v));
}

ProbMap certain(const LabelMap& labels, std::size_t classes) {
    std::vector<double> v(classes * labels.size(), 0.0);
    for (std::size_t i = 0; i < labels.size(); ++i)
        v[labels[i] * labels.size() + i] = 1.0;
    return ProbMap(classes, labels.height(), labels.width(), std::move(v));
}

// Per-class EI recomputed over each class's pairwise union and averaged with
// union-size weights.
double ei_per_class_oracle(const ProbMap& rp, const LabelMap& rl, const ProbMap& pp, const LabelMap& pl,
                           std::uint32_t classes) {
    double weighted = 0.0;
    double total = 0.0;
    for (std::uint32_t c = 1; c < classes; ++c) {
        double sum = 0.0;
        double uni = 0.0;
        for (std::size_t i = 0; i < rl.size(); ++i) {
            if (rl[i] != c && pl[i] != c)
                continue;
            uni += 1.0;
            if (rl[i] == pl[i])
                sum += std::sqrt(oracle::max_channel(rp, i) * oracle::max_channel(pp, i));
        }
        if (uni == 0.0)
            continue;
        weighted += (sum / uni) * uni;
        total += uni;
    }
    return total == 0.0 ? 1.0 : weighted / total;
}

} // namespace

TEST(Ei, IdenticalCertainMapsScoreOne) {
    const LabelMap l = row({0, 1, 1, 0, 1});
    const ProbMap p = certain(l, 2);
    const auto v = ei_consistency(p, l, p, l);
    EXPECT_DOUBLE_EQ(v.value, 1.0);
    EXPECT_EQ(v.n_effective, 5u);
}

TEST(Ei, AllFlippedScoresZero) {
    const LabelMap a = row({0, 1, 1, 0});
    const LabelMap b = row({1, 0, 0, 1});
    EXPECT_EQ(ei_consistency(certain(a, 2), a, certain(b, 2), b).value, 0.0);
}

TEST(Ei, TwoPixelHandCase) {
    // Pixel 0 agrees on class 1 with confidences 0.9 and 0.4; pixel 1 disagrees.
    const LabelMap rl = row({1, 1});
    const LabelMap pl = row({1, 2});
    const ProbMap rp(3, 1, 2, {0.05, 0.05, 0.9, 0.9, 0.05, 0.05});
    const ProbMap pp(3, 1, 2, {0.3, 0.1, 0.4, 0.2, 0.3, 0.7});
    EXPECT_DOUBLE_EQ(ei_consistency(rp, rl, pp, pl).value, 0.3);
}

TEST(Ei, SingleChannelUsesComplementConfidence) {
    const LabelMap l = row({0, 1});
    const ProbMap a(1, 1, 2, {0.2, 0.9}, npy::Dtype::kF8, false);
    const ProbMap b(1, 1, 2, {0.1, 0.6}, npy::Dtype::kF8, false);
    EXPECT_NEAR(ei_consistency(a, l, b, l).value, (std::sqrt(0.8 * 0.9) + std::sqrt(0.9 * 0.6)) / 2, 1e-15);
}

TEST(Ei, ShapeMismatch) {
    const LabelMap a = row({0, 1});
    const LabelMap b(2, 1, {0, 1});
    EXPECT_THROW(ei_consistency(certain(a, 2), a, certain(b, 2), b), ValidationError);
}

TEST(Ei, FuzzBoundsAndOracle) {
    std::mt19937_64 gen(77);
    for (int iter = 0; iter < 2000; ++iter) {
        const std::size_t classes = 2 + gen() % 3;
        const std::size_t h = 1 + gen() % 6;
        const std::size_t w = 1 + gen() % 6;
        const ProbMap rp = random_probs(gen, classes, h, w);
        const ProbMap pp = random_probs(gen, classes, h, w);
        const LabelMap rl = argmax_labels(rp);
        const LabelMap pl = argmax_labels(pp);
        const double v = ei_consistency(rp, rl, pp, pl).value;
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
        ASSERT_LE(v, oracle::agreement_fraction(rl, pl) + 1e-15);
        ASSERT_NEAR(v, oracle::ei(rp, rl, pp, pl), 1e-12);
        const auto c = static_cast<std::uint32_t>(classes);
        const auto per_class = ei_consistency(rp, rl, pp, pl, {true, c});
        ASSERT_NEAR(per_class.value, ei_per_class_oracle(rp, rl, pp, pl, c), 1e-12);
        ASSERT_GE(per_class.value, 0.0);
        ASSERT_LE(per_class.value, 1.0);
    }
}

TEST(Ei, PerClassEmptyForegroundIsDegenerate) {
    const LabelMap l = row({0, 0, 0});
    const auto v = ei_consistency(certain(l, 2), l, certain(l, 2), l, {true, 2});
    EXPECT_TRUE(v.degenerate);
    EXPECT_EQ(v.value, 1.0);
}

TEST(Nhd, Identity) {
    const LabelMap a = row({0, 1, 1, 0, 1});
    EXPECT_EQ(nhd_consistency(a, a, 2).value, 1.0);
}

TEST(Nhd, DisjointForegrounds) {
    std::vector<std::uint32_t> a(16, 0);
    std::vector<std::uint32_t> b(16, 0);
    for (int i = 0; i < 5; ++i)
        a[i] = 1;
    for (int i = 10; i < 13; ++i)
        b[i] = 1;
    const auto v = nhd_consistency(row(a), row(b), 2);
    EXPECT_EQ(v.value, 0.0);
    EXPECT_EQ(v.n_effective, 8u);
}

TEST(Nhd, OverlapHandCase) {
    // ref {a,b,c}, pert {b,c,d}: union 4, two disagreements.
    const LabelMap ref = row({1, 1, 1, 0, 0});
    const LabelMap pert = row({0, 1, 1, 1, 0});
    EXPECT_DOUBLE_EQ(nhd_consistency(ref, pert, 2).value, 0.5);
    EXPECT_DOUBLE_EQ(oracle::binary_iou(ref, pert), 0.5);
}

TEST(Nhd, EmptyBothIsDegenerateOne) {
    const LabelMap z = row({0, 0, 0});
    const auto v = nhd_consistency(z, z, 3);
    EXPECT_EQ(v.value, 1.0);
    EXPECT_TRUE(v.degenerate);
}

TEST(Nhd, LabelOutOfRange) {
    EXPECT_THROW(nhd_consistency(row({0, 3}), row({0, 1}), 3), ValidationError);
}

TEST(Nhd, EmptyClassUnionsCarryNoWeight) {
    // Class 2 never appears; result equals the class-1 score alone.
    const LabelMap ref = row({1, 1, 0, 0});
    const LabelMap pert = row({1, 0, 0, 0});
    EXPECT_DOUBLE_EQ(nhd_consistency(ref, pert, 3).value, 0.5);
}

TEST(Nhd, FrequencyWeighting) {
    // Class 1: union {0,1}, one flip -> 0.5, mean count 1.5.
    // Class 2: union {1,2,3,4}, one flip -> 0.75, mean count 3.5.
    const LabelMap ref = row({1, 1, 2, 2, 2, 0});
    const LabelMap pert = row({1, 2, 2, 2, 2, 0});
    EXPECT_NEAR(nhd_consistency(ref, pert, 3).value, (2 * 0.5 + 4 * 0.75) / 6.0, 1e-15);
    EXPECT_NEAR(nhd_consistency(ref, pert, 3).value, oracle::nhd_per_class(ref, pert, 3), 1e-15);
    EXPECT_NEAR(nhd_consistency(ref, pert, 3, NhdWeighting::kClassFrequency).value, (1.5 * 0.5 + 3.5 * 0.75) / 5.0,
                1e-15);
}

TEST(Nhd, FuzzIouOracleAndSymmetry) {
    std::mt19937_64 gen(5);
    for (int iter = 0; iter < 2000; ++iter) {
        const std::size_t h = 1 + gen() % 16;
        const std::size_t w = 1 + gen() % 16;
        const LabelMap a = random_labels(gen, h, w, 1);
        const LabelMap b = random_labels(gen, h, w, 1);
        const double v = nhd_consistency(a, b, 2).value;
        ASSERT_NEAR(v, oracle::binary_iou(a, b), 1e-12);
        ASSERT_EQ(v, nhd_consistency(b, a, 2).value);
        ASSERT_GE(v, 0.0);
        ASSERT_LE(v, 1.0);
    }
}

TEST(Nhd, FuzzMulticlassOracle) {
    std::mt19937_64 gen(6);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::uint32_t classes = 3 + static_cast<std::uint32_t>(gen() % 3);
        const std::size_t h = 1 + gen() % 10;
        const std::size_t w = 1 + gen() % 10;
        const LabelMap a = random_labels(gen, h, w, classes - 1);
        const LabelMap b = random_labels(gen, h, w, classes - 1);
        const double v = nhd_consistency(a, b, classes).value;
        ASSERT_NEAR(v, oracle::nhd_per_class(a, b, classes), 1e-12);
        ASSERT_NEAR(v, nhd_consistency(b, a, classes).value, 1e-15);
    }
}

TEST(Ars, SplitInstanceHandCase) {
    std::vector<std::uint32_t> ref(12, 0);
    std::vector<std::uint32_t> pert(12, 0);
    for (int i = 0; i < 10; ++i) {
        ref[i] = 1;
        pert[i] = i < 5 ? 1 : 2;
    }
    const auto v = ars_consistency(row(ref), row(pert), 0.5);
    EXPECT_DOUBLE_EQ(v.value, 2.0 / 3.0);
    EXPECT_EQ(v.n_effective, 10u);
}

TEST(Ars, PermutationAndOffsetInvariance) {
    const LabelMap ref = row({0, 1, 1, 2, 2, 2, 3, 0, 3});
    const LabelMap pert = row({0, 1, 2, 2, 2, 3, 3, 1, 3});
    const LabelMap permuted = row({0, 3, 1, 1, 1, 2, 2, 3, 2});
    std::vector<std::uint32_t> shifted(pert.values().begin(), pert.values().end());
    for (auto& v : shifted)
        v += 7;
    for (double alpha : {0.0, 0.25, 0.5, 1.0}) {
        const double base = ars_consistency(ref, pert, alpha).value;
        EXPECT_NEAR(ars_consistency(ref, permuted, alpha).value, base, 1e-15);
        EXPECT_NEAR(ars_consistency(ref, row(shifted), alpha).value, base, 1e-15);
        EXPECT_EQ(ars_consistency(ref, ref, alpha).value, 1.0);
    }
    const LabelMap relabeled = row({0, 4, 4, 9, 9, 9, 2, 0, 2});
    EXPECT_EQ(ars_consistency(ref, relabeled).value, 1.0);
}

TEST(Ars, EmptyReferenceIsDegenerate) {
    EXPECT_THROW(ars_consistency(row({0, 0}), row({1, 1})), DegenerateReferenceError);
}

TEST(Ars, AlphaRange) {
    const LabelMap a = row({1, 1});
    EXPECT_THROW(ars_consistency(a, a, -0.1), ValidationError);
    EXPECT_THROW(ars_consistency(a, a, 1.5), ValidationError);
}

TEST(Ars, FuzzPairCountingOracle) {
    std::mt19937_64 gen(8);
    const double alphas[] = {0.0, 0.25, 0.5, 1.0};
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t h = 1 + gen() % 8;
        const std::size_t w = 1 + gen() % 8;
        const LabelMap ref = random_labels(gen, h, w, 5);
        const LabelMap pert = random_labels(gen, h, w, 5);
        if (ref.foreground_count() == 0)
            continue;
        const double alpha = alphas[iter % 4];
        ASSERT_NEAR(ars_consistency(ref, pert, alpha).value, oracle::ars_pairs(ref, pert, alpha), 1e-12);
    }
}

// With identical foreground supports, alpha = 0.5 is symmetric.
TEST(Ars, SymmetricOnSharedSupport) {
    std::mt19937_64 gen(9);
    for (int iter = 0; iter < 500; ++iter) {
        const LabelMap a = random_labels(gen, 6, 6, 4);
        std::vector<std::uint32_t> bv(a.size());
        for (std::size_t i = 0; i < a.size(); ++i)
            bv[i] = a[i] == 0 ? 0 : 1 + static_cast<std::uint32_t>(gen() % 3);
        const LabelMap b(6, 6, std::move(bv));
        if (a.foreground_count() == 0)
            continue;
        ASSERT_NEAR(ars_consistency(a, b, 0.5).value, ars_consistency(b, a, 0.5).value, 1e-12);
    }
}

TEST(Degenerate, Flags) {
    std::vector<std::uint32_t> v(100, 0);
    EXPECT_TRUE(degenerate_output_flag(LabelMap(10, 10, v)).flagged);
    EXPECT_TRUE(degenerate_output_flag(LabelMap(10, 10, std::vector<std::uint32_t>(100, 1))).flagged);
    for (int i = 0; i < 30; ++i)
        v[i] = 1;
    const auto r = degenerate_output_flag(LabelMap(10, 10, v));
    EXPECT_FALSE(r.flagged);
    EXPECT_DOUBLE_EQ(r.foreground_fraction, 0.3);
}

TEST(Metric, Names) {
    for (Metric m : {Metric::kEi, Metric::kNhd, Metric::kArs})
        EXPECT_EQ(parse_metric(to_string(m)), m);
    EXPECT_THROW(parse_metric("dice"), ValidationError);
    EXPECT_EQ(parse_weighting("frequency"), NhdWeighting::kClassFrequency);
}
