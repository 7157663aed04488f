#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "relhoi/fusion.hpp"
#include "support.hpp"

namespace relhoi {
namespace {

using testing::error_kind_of;

Tensor random_matrix(std::mt19937_64& rng, std::size_t rows, std::size_t cols, float scale = 3) {
    std::uniform_real_distribution<float> dist(-scale, scale);
    std::vector<float> data(rows * cols);
    for (auto& v : data) v = dist(rng);
    return Tensor::matrix(rows, cols, std::move(data));
}

TEST(FuseTernaryTest, NoTripletsLeavesBinary) {
    const Tensor y = Tensor::matrix({{1, -2}, {0.5f, 3}});
    EXPECT_TRUE(fuse_ternary(y, Tensor::zeros({0, 2}), {}, 1.0).bitwise_equal(y));
}

TEST(FuseTernaryTest, ZeroAlphaLeavesBinary) {
    const Tensor y = Tensor::matrix({{1, -2}, {0.5f, 3}});
    const std::size_t assign[] = {0, 1};
    EXPECT_TRUE(fuse_ternary(y, Tensor::matrix({{7, 7}, {8, 8}}), assign, 0.0).bitwise_equal(y));
}

TEST(FuseTernaryTest, TwoTripletsOnOnePair) {
    const Tensor y = Tensor::matrix({{1, -2}, {0.5f, 3}});
    const Tensor t = Tensor::matrix({{0.25f, 1}, {0.5f, -4}});
    const std::size_t assign[] = {0, 0};
    const Tensor out = fuse_ternary(y, t, assign, 2.0);
    EXPECT_EQ(out.at(0, 0), 1.0f + 2.0f * (0.25f + 0.5f));
    EXPECT_EQ(out.at(0, 1), -2.0f + 2.0f * (1.0f - 4.0f));
    EXPECT_EQ(out.at(1, 0), 0.5f);
    EXPECT_EQ(out.at(1, 1), 3.0f);
}

TEST(FuseTernaryTest, MatchesGroupByPairOracleBitwise) {
    std::mt19937_64 rng(107);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t m = 1 + rng() % 6, r = rng() % 9, c = 1 + rng() % 5;
        std::vector<std::size_t> assign(r);
        for (auto& a : assign) a = rng() % m;
        const double alpha = (rng() % 4) * 0.5;
        const Tensor y = random_matrix(rng, m, c), t = random_matrix(rng, r, c);
        const Tensor out = fuse_ternary(y, t, assign, alpha);
        const auto want = verify::fuse_oracle(y, t, assign, alpha);
        ASSERT_EQ(out.size(), want.size());
        for (std::size_t k = 0; k < want.size(); ++k) EXPECT_EQ(out[k], want[k]) << "trial " << trial;
    }
}

TEST(FuseTernaryTest, Errors) {
    const Tensor y = Tensor::zeros({2, 3});
    const std::size_t dangling[] = {2};
    EXPECT_EQ(error_kind_of([&] { fuse_ternary(y, Tensor::zeros({1, 3}), dangling, 1.0); }), ErrorKind::Index);
    const std::size_t one[] = {0};
    EXPECT_EQ(error_kind_of([&] { fuse_ternary(y, Tensor::zeros({2, 3}), one, 1.0); }), ErrorKind::Shape);
    EXPECT_EQ(error_kind_of([&] { fuse_ternary(y, Tensor::zeros({1, 4}), one, 1.0); }), ErrorKind::Shape);
}

TEST(FuseSemanticTest, WorkedExample) {
    const Tensor out = fuse_semantic(Tensor::matrix({{1, -1}}), Tensor::matrix({{2, 2}}), 0.4);
    EXPECT_NEAR(out[0], 1.8, 1e-6);
    EXPECT_NEAR(out[1], -0.2, 1e-6);
}

TEST(FuseSemanticTest, IdentityCases) {
    std::mt19937_64 rng(109);
    const Tensor y = random_matrix(rng, 3, 4);
    EXPECT_TRUE(fuse_semantic(y, random_matrix(rng, 3, 4), 0.0).bitwise_equal(y));
    EXPECT_TRUE(fuse_semantic(y, Tensor::zeros({3, 4}), 0.4).bitwise_equal(y));
    EXPECT_EQ(error_kind_of([&] { fuse_semantic(y, Tensor::zeros({3, 5}), 0.4); }), ErrorKind::Shape);
}

TEST(LabelMatrixTest, Validation) {
    EXPECT_EQ(error_kind_of([] { LabelMatrix(2, 2, {0, 1, 0}); }), ErrorKind::Shape);
    EXPECT_EQ(error_kind_of([] { LabelMatrix(1, 2, {0, 2}); }), ErrorKind::Validation);
    LabelMatrix l = LabelMatrix::zeros(2, 3);
    l.set(1, 2, true);
    EXPECT_EQ(l.positives(), 1u);
    EXPECT_TRUE(l.at(1, 2));
}

TEST(FocalLossTest, SinglePositiveAtZeroLogit) {
    const FocalLoss f = focal_loss(Tensor::matrix({{0}}), LabelMatrix(1, 1, {1}), 2.0, 0.25);
    EXPECT_NEAR(f.loss, 0.25 * 0.25 * std::log(2.0), 1e-12);
    EXPECT_NEAR(f.loss, 0.0433217, 1e-7);
    EXPECT_EQ(f.positives, 1u);
}

TEST(FocalLossTest, AllNegativeDenominatorClampedToOne) {
    const Tensor logits = Tensor::matrix({{-1, 0.5f}, {2, -3}});
    const FocalLoss f = focal_loss(logits, LabelMatrix::zeros(2, 2), 0.0, 0.5);
    double want = 0;
    for (float x : logits.values()) want += 0.5 * -std::log(1.0 - 1.0 / (1.0 + std::exp(-double(x))));
    EXPECT_NEAR(f.loss, want, 1e-12);
    EXPECT_EQ(f.loss, f.unnormalized);
    EXPECT_EQ(f.positives, 0u);
}

TEST(FocalLossTest, NormalizedByPositiveCount) {
    std::mt19937_64 rng(113);
    const Tensor logits = random_matrix(rng, 3, 4);
    const LabelMatrix labels(3, 4, {1, 0, 0, 1, 0, 0, 1, 0, 0, 0, 0, 0});
    const FocalLoss f = focal_loss(logits, labels, 2.0, 0.25);
    EXPECT_NEAR(f.loss, f.unnormalized / 3.0, 1e-12);
}

TEST(FocalLossTest, TermsMatchTextbookOracle) {
    for (double x = -12; x <= 12; x += 0.37)
        for (bool pos : {false, true})
            for (double gamma : {0.0, 1.0, 2.0, 2.5})
                for (double a : {0.0, 0.25, 0.5, 1.0})
                    EXPECT_NEAR(focal_term(x, pos, gamma, a), verify::focal_oracle(x, pos, gamma, a),
                                1e-10 * std::max(1.0, std::abs(verify::focal_oracle(x, pos, gamma, a))));
}

TEST(FocalLossTest, ExtremeLogitsStayFinite) {
    for (double x : {-80.0, -40.0, 40.0, 80.0})
        for (bool pos : {false, true}) {
            EXPECT_TRUE(std::isfinite(focal_term(x, pos, 2.0, 0.25)));
            EXPECT_TRUE(std::isfinite(focal_term_grad(x, pos, 2.0, 0.25)));
            EXPECT_GE(focal_term(x, pos, 2.0, 0.25), 0.0);
        }
}

TEST(FocalLossTest, GradientMatchesCentralDifferences) {
    std::mt19937_64 rng(127);
    const double h = 1e-3;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(24);
        std::vector<bool> y(24);
        for (std::size_t k = 0; k < 24; ++k) {
            x[k] = std::uniform_real_distribution<double>(-4, 4)(rng);
            y[k] = rng() % 3 == 0;
        }
        for (std::size_t k = 0; k < 24; ++k) {
            const double fd =
                (focal_term(x[k] + h, y[k], 2.0, 0.25) - focal_term(x[k] - h, y[k], 2.0, 0.25)) / (2 * h);
            const double g = focal_term_grad(x[k], y[k], 2.0, 0.25);
            EXPECT_LT(std::abs(fd - g), 1e-4 * std::max(1e-3, std::abs(g))) << x[k] << " " << y[k];
        }
    }
}

TEST(FocalLossTest, GradientIsScaledByNormalizer) {
    const Tensor logits = Tensor::matrix({{0.3f, -1.2f}, {2.0f, 0.1f}});
    const LabelMatrix labels(2, 2, {1, 0, 1, 0});
    const FocalLoss f = focal_loss(logits, labels, 2.0, 0.25);
    for (std::size_t k = 0; k < 4; ++k)
        EXPECT_NEAR(f.grad[k], focal_term_grad(logits[k], labels.at(k / 2, k % 2), 2.0, 0.25) / 2.0, 1e-15);
}

TEST(FocalLossTest, DescentStepReducesLoss) {
    std::mt19937_64 rng(131);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor logits = random_matrix(rng, 4, 6);
        std::vector<std::uint8_t> lv(24);
        for (auto& v : lv) v = rng() % 4 == 0;
        const LabelMatrix labels(4, 6, lv);
        const FocalLoss f = focal_loss(logits, labels, 2.0, 0.25);
        std::vector<float> stepped(logits.values().begin(), logits.values().end());
        for (std::size_t k = 0; k < stepped.size(); ++k) stepped[k] -= static_cast<float>(0.05 * f.grad[k]);
        EXPECT_LE(focal_loss(Tensor::matrix(4, 6, stepped), labels, 2.0, 0.25).loss, f.loss);
        EXPECT_GE(f.loss, 0.0);
    }
}

TEST(FocalLossTest, ShapeMismatch) {
    EXPECT_EQ(error_kind_of([] { focal_loss(Tensor::zeros({2, 2}), LabelMatrix::zeros(2, 3), 2, 0.25); }),
              ErrorKind::Shape);
}

TEST(FinalScoresTest, UnitConfidenceGivesSigmoid) {
    const Tensor logits = Tensor::matrix({{0, 2, -3}});
    const PairConfidence conf[] = {{1, 1}};
    const Tensor s = final_scores(logits, conf, 2.8);
    for (std::size_t k = 0; k < 3; ++k) EXPECT_NEAR(s[k], ops::sigmoid(logits[k]), 1e-7);
}

TEST(FinalScoresTest, WorkedExample) {
    const PairConfidence conf[] = {{0.9f, 0.8f}};
    const Tensor s = final_scores(Tensor::matrix({{0}}), conf, 2.8);
    EXPECT_NEAR(s[0], std::pow(0.72, 2.8) * 0.5, 1e-6);
    EXPECT_NEAR(s[0], 0.19929711, 1e-6);
}

TEST(FinalScoresTest, MonotoneNonincreasingInLambda) {
    std::mt19937_64 rng(137);
    for (int trial = 0; trial < 100; ++trial) {
        const Tensor logits = random_matrix(rng, 3, 4, 6);
        std::uniform_real_distribution<float> unit(0.01f, 0.99f);
        const PairConfidence conf[] = {{unit(rng), unit(rng)}, {unit(rng), unit(rng)}, {1, unit(rng)}};
        const double l1 = 0.5 + (rng() % 10) * 0.3, l2 = l1 + 0.1 + (rng() % 5) * 0.4;
        const Tensor a = final_scores(logits, conf, l1), b = final_scores(logits, conf, l2);
        for (std::size_t k = 0; k < a.size(); ++k) {
            EXPECT_LE(b[k], a[k]);
            if (a[k] > 1e-20f) {
                EXPECT_LT(b[k], a[k]);
            }
            EXPECT_GE(b[k], 0.0f);
            EXPECT_LE(a[k], 1.0f);
        }
    }
}

TEST(FinalScoresTest, Errors) {
    const PairConfidence bad[] = {{1.2f, 0.5f}};
    EXPECT_EQ(error_kind_of([&] { final_scores(Tensor::zeros({1, 2}), bad, 2.8); }), ErrorKind::Validation);
    const PairConfidence ok[] = {{0.5f, 0.5f}};
    EXPECT_EQ(error_kind_of([&] { final_scores(Tensor::zeros({2, 2}), ok, 2.8); }), ErrorKind::Shape);
    EXPECT_EQ(error_kind_of([&] { final_scores(Tensor::zeros({1, 2}), ok, 0.0); }), ErrorKind::Config);
}

}  // namespace
}  // namespace relhoi
