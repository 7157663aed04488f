#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "relhoi/tokens.hpp"
#include "support.hpp"

namespace relhoi {
namespace {

using testing::error_kind_of;
using testing::FixtureWorld;

constexpr int kPerson = 0, kCup = 1, kBottle = 2;

CategoryTable table() {
    return CategoryTable({{"person", "a"}, {"cup", "a"}, {"bottle", "a"}, {"apple", "an"}}, {"hold", "pour"}, "person");
}

std::vector<Detection> detections_of(const std::vector<int>& categories) {
    std::vector<Detection> out;
    for (std::size_t k = 0; k < categories.size(); ++k) {
        const float x = 10.0f * static_cast<float>(k);
        out.push_back({Box{x, x, x + 30, x + 40}, 0.9f, categories[k], std::vector<float>(4, 0.1f * static_cast<float>(k))});
    }
    return out;
}

TEST(EnumerationTest, ThreeDetectionsOneHuman) {
    const auto dets = detections_of({kPerson, kCup, kBottle});
    EXPECT_EQ(enumerate_pairs(dets, table()), (std::vector<PairIndex>{{0, 1}, {0, 2}}));
}

TEST(EnumerationTest, NoHumansNoPairs) {
    EXPECT_TRUE(enumerate_pairs(detections_of({kCup, kBottle, kCup}), table()).empty());
    EXPECT_TRUE(enumerate_pairs({}, table()).empty());
}

TEST(EnumerationTest, HumanHumanPairsInBothDirections) {
    const auto pairs = enumerate_pairs(detections_of({kCup, kPerson, kPerson}), table());
    EXPECT_EQ(pairs, (std::vector<PairIndex>{{1, 0}, {1, 2}, {2, 0}, {2, 1}}));
}

TEST(EnumerationTest, PairCountIsHumansTimesOthers) {
    std::mt19937_64 rng(67);
    const CategoryTable t = table();
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = rng() % 9;
        std::vector<int> cats(n);
        std::size_t h = 0;
        for (auto& c : cats) {
            c = static_cast<int>(rng() % 4);
            h += c == kPerson;
        }
        const auto dets = detections_of(cats);
        const auto pairs = enumerate_pairs(dets, t);
        EXPECT_EQ(pairs.size(), n == 0 ? 0 : h * (n - 1));
        EXPECT_EQ(pairs, verify::brute_force_pairs(dets, t));
        EXPECT_TRUE(std::is_sorted(pairs.begin(), pairs.end()));
    }
}

TEST(EnumerationTest, EmptyBankNoTriplets) {
    EXPECT_TRUE(enumerate_triplets(detections_of({kPerson, kCup, kBottle}), table(), KnowledgeBank{}).empty());
}

TEST(EnumerationTest, OneTripletPerHuman) {
    const CategoryTable t = table();
    const KnowledgeBank bank({{kCup, kBottle}}, t);
    const auto triplets = enumerate_triplets(detections_of({kPerson, kPerson, kCup, kBottle}), t, bank);
    EXPECT_EQ(triplets, (std::vector<TripletIndex>{{0, 2, 3}, {1, 2, 3}}));
}

TEST(EnumerationTest, BothDirectionsGiveDistinctRoles) {
    const CategoryTable t = table();
    const KnowledgeBank bank({{kCup, kBottle}, {kBottle, kCup}}, t);
    const auto triplets = enumerate_triplets(detections_of({kPerson, kCup, kBottle}), t, bank);
    EXPECT_EQ(triplets, (std::vector<TripletIndex>{{0, 1, 2}, {0, 2, 1}}));
}

TEST(EnumerationTest, TripletsMatchBruteForce) {
    std::mt19937_64 rng(71);
    const CategoryTable t = table();
    const KnowledgeBank bank({{kCup, kBottle}, {3, kCup}, {kPerson, kBottle}}, t);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<int> cats(rng() % 8);
        for (auto& c : cats) c = static_cast<int>(rng() % 4);
        const auto dets = detections_of(cats);
        const auto triplets = enumerate_triplets(dets, t, bank);
        EXPECT_EQ(triplets, verify::brute_force_triplets(dets, t, bank));
    }
}

class TokenBuildTest : public ::testing::Test {
protected:
    FixtureWorld world_ = FixtureWorld::make();
    const ModelWeights& w_ = world_.engine.weights();

    // Returns the first fixture scene with at least one triplet.
    Scene scene_with_triplets() const {
        for (std::size_t s = 0; s < 50; ++s) {
            Scene scene = world_.scene(s);
            if (!enumerate_triplets(scene.detections, world_.categories, world_.bank).empty()) return scene;
        }
        ADD_FAILURE() << "no fixture scene has a triplet";
        return world_.scene(0);
    }
};

verify::Matrix unary_oracle(const Scene& scene, const ModelWeights& w) {
    verify::Matrix rows;
    for (const auto& d : scene.detections) {
        std::vector<double> r(d.feature.begin(), d.feature.end());
        const auto text = w.object_text.row(static_cast<std::size_t>(d.category));
        r.insert(r.end(), text.begin(), text.end());
        rows.push_back(r);
    }
    return verify::perceptron(rows, w.unary);
}

TEST_F(TokenBuildTest, EnrichedUnaryMatchesOracle) {
    const Scene scene = world_.scene(0);
    const EnrichedUnary e = enrich_unary(scene.detections, w_.object_text, w_.unary);
    EXPECT_EQ(e.tokens.dims(), (Dims{scene.detections.size(), 16}));
    EXPECT_LT(verify::max_abs_diff(e.tokens, unary_oracle(scene, w_)), 1e-5);
}

TEST_F(TokenBuildTest, ZeroDetectionsGiveEmptySets) {
    const EnrichedUnary e = enrich_unary({}, w_.object_text, w_.unary);
    EXPECT_EQ(e.tokens.dims(), (Dims{0, 16}));
    const Scene scene = world_.scene(0);
    const PairSet p = build_pairs({}, world_.categories, e, w_.pair, scene.size, w_.binary_pos);
    EXPECT_EQ(p.size(), 0u);
    EXPECT_EQ(p.tokens.dims(), (Dims{0, 16}));
    EXPECT_EQ(p.positions.dims(), (Dims{0, 16}));
    const TripletSet t = build_triplets({}, world_.categories, e, world_.bank, p, w_.triplet, scene.size, w_.ternary_pos);
    EXPECT_EQ(t.tokens.dims(), (Dims{0, 16}));
}

TEST_F(TokenBuildTest, ZeroMlpGivesBias) {
    Mlp mlp = zero_mlp(16 + 8, 16);
    mlp.second.bias = Tensor::filled({16}, 0.5f);
    const Scene scene = world_.scene(1);
    const EnrichedUnary e = enrich_unary(scene.detections, w_.object_text, mlp);
    for (float v : e.tokens.values()) EXPECT_EQ(v, 0.5f);
}

TEST_F(TokenBuildTest, UnknownCategoryRejected) {
    Scene scene = world_.scene(0);
    scene.detections[0].category = 99;
    EXPECT_EQ(error_kind_of([&] { enrich_unary(scene.detections, w_.object_text, w_.unary); }), ErrorKind::Validation);
}

TEST_F(TokenBuildTest, PairTokensMatchOracle) {
    const Scene scene = world_.scene(0);
    const EnrichedUnary e = enrich_unary(scene.detections, w_.object_text, w_.unary);
    const PairSet p = build_pairs(scene.detections, world_.categories, e, w_.pair, scene.size, w_.binary_pos);
    ASSERT_GT(p.size(), 0u);
    const verify::Matrix u = unary_oracle(scene, w_);
    verify::Matrix concat, spatial;
    const auto boxes = scene.boxes();
    for (const auto& [i, j] : p.pairs) {
        std::vector<double> row = u[i];
        row.insert(row.end(), u[j].begin(), u[j].end());
        concat.push_back(row);
        const auto f = verify::spatial_oracle(boxes[i], boxes[j], scene.size);
        spatial.emplace_back(f.begin(), f.end());
    }
    EXPECT_LT(verify::max_abs_diff(p.tokens, verify::perceptron(concat, w_.pair)), 1e-4);
    EXPECT_LT(verify::max_abs_diff(p.positions, verify::perceptron(spatial, w_.binary_pos)), 1e-4);
}

TEST_F(TokenBuildTest, TripletTokensAndAssignment) {
    const Scene scene = scene_with_triplets();
    const EnrichedUnary e = enrich_unary(scene.detections, w_.object_text, w_.unary);
    const PairSet p = build_pairs(scene.detections, world_.categories, e, w_.pair, scene.size, w_.binary_pos);
    const TripletSet t =
        build_triplets(scene.detections, world_.categories, e, world_.bank, p, w_.triplet, scene.size, w_.ternary_pos);
    ASSERT_GT(t.size(), 0u);
    ASSERT_EQ(t.pair_assignment.size(), t.size());
    const verify::Matrix u = unary_oracle(scene, w_);
    verify::Matrix concat;
    for (std::size_t k = 0; k < t.size(); ++k) {
        const auto& tr = t.triplets[k];
        EXPECT_EQ(p.pairs.at(t.pair_assignment[k]), (PairIndex{tr.human, tr.object}));
        EXPECT_TRUE(world_.bank.licenses(scene.detections[tr.object].category, scene.detections[tr.tool].category));
        std::vector<double> row = u[tr.human];
        row.insert(row.end(), u[tr.object].begin(), u[tr.object].end());
        row.insert(row.end(), u[tr.tool].begin(), u[tr.tool].end());
        concat.push_back(row);
    }
    EXPECT_LT(verify::max_abs_diff(t.tokens, verify::perceptron(concat, w_.triplet)), 1e-4);
    EXPECT_EQ(t.positions.dims(), (Dims{t.size(), 16}));
}

TEST_F(TokenBuildTest, IdenticalDetectionsGiveIdenticalRows) {
    Scene scene = world_.scene(0);
    scene.detections.push_back(scene.detections.back());
    const EnrichedUnary e = enrich_unary(scene.detections, w_.object_text, w_.unary);
    const std::size_t n = scene.detections.size();
    for (std::size_t c = 0; c < e.tokens.cols(); ++c) EXPECT_EQ(e.tokens.at(n - 1, c), e.tokens.at(n - 2, c));
}

TEST_F(TokenBuildTest, PermutationMovesRowsAlong) {
    const Scene scene = world_.scene(3);
    const std::size_t n = scene.detections.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::mt19937_64 rng(73);
    std::shuffle(perm.begin(), perm.end(), rng);
    ASSERT_FALSE(std::is_sorted(perm.begin(), perm.end()));

    Scene permuted = scene;
    for (std::size_t k = 0; k < n; ++k) permuted.detections[k] = scene.detections[perm[k]];

    const auto build = [&](const Scene& s) {
        const EnrichedUnary e = enrich_unary(s.detections, w_.object_text, w_.unary);
        return build_pairs(s.detections, world_.categories, e, w_.pair, s.size, w_.binary_pos);
    };
    const PairSet a = build(scene), b = build(permuted);
    ASSERT_EQ(a.size(), b.size());
    std::map<PairIndex, std::size_t> row_of;
    for (std::size_t l = 0; l < a.size(); ++l) row_of[a.pairs[l]] = l;
    for (std::size_t l = 0; l < b.size(); ++l) {
        const PairIndex original{perm[b.pairs[l].first], perm[b.pairs[l].second]};
        const std::size_t r = row_of.at(original);
        for (std::size_t c = 0; c < a.tokens.cols(); ++c) {
            EXPECT_EQ(b.tokens.at(l, c), a.tokens.at(r, c));
            EXPECT_EQ(b.positions.at(l, c), a.positions.at(r, c));
        }
    }
}

TEST_F(TokenBuildTest, MisalignedEnrichmentRejected) {
    const Scene scene = world_.scene(0);
    const EnrichedUnary e{Tensor::zeros({1, 16})};
    EXPECT_EQ(error_kind_of([&] {
                  build_pairs(scene.detections, world_.categories, e, w_.pair, scene.size, w_.binary_pos);
              }),
              ErrorKind::Shape);
}

}  // namespace
}  // namespace relhoi
