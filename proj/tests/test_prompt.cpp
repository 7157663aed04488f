#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "relhoi/prompt.hpp"
#include "relhoi/tokens.hpp"
#include "support.hpp"

namespace relhoi {
namespace {

using testing::error_kind_of;
using testing::FixtureWorld;

class PromptTest : public ::testing::Test {
protected:
    FixtureWorld world_ = FixtureWorld::make();
    const ModelWeights& w_ = world_.engine.weights();
    Scene scene_ = world_.scene(0);
    std::vector<PairIndex> pairs_ = enumerate_pairs(scene_.detections, world_.categories);

    // Prompt row oracle: mean prefix, mean act tokens, person slot, object text, then the projection.
    verify::Matrix prompt_oracle(const std::vector<PairIndex>& pairs, const PromptWeights& p) const {
        const auto mean = [](const Tensor& t) {
            std::vector<double> m(t.cols(), 0.0);
            for (std::size_t r = 0; r < t.rows(); ++r)
                for (std::size_t c = 0; c < t.cols(); ++c) m[c] += t.at(r, c);
            for (auto& v : m) v /= static_cast<double>(t.rows());
            return m;
        };
        verify::Matrix rows;
        for (const auto& [i, j] : pairs) {
            std::vector<double> row = mean(p.prefix);
            const auto act = mean(p.act);
            row.insert(row.end(), act.begin(), act.end());
            row.insert(row.end(), p.person.values().begin(), p.person.values().end());
            const auto obj = w_.object_text.row(static_cast<std::size_t>(scene_.detections[j].category));
            row.insert(row.end(), obj.begin(), obj.end());
            rows.push_back(row);
        }
        return verify::affine(rows, p.projection);
    }

    Tensor regional() const { return contextual_features(scene_.detections, pairs_, w_.context_pair); }
    Tensor global() const { return global_context(scene_.context.flat_spatial(), w_.global_proj); }
    Tensor m0() const { return encode_prompts(scene_.detections, pairs_, w_.prompt, w_.object_text); }
};

TEST_F(PromptTest, ContextualFeaturesMatchOracle) {
    verify::Matrix concat;
    for (const auto& [i, j] : pairs_) {
        std::vector<double> row(scene_.detections[i].feature.begin(), scene_.detections[i].feature.end());
        row.insert(row.end(), scene_.detections[j].feature.begin(), scene_.detections[j].feature.end());
        concat.push_back(row);
    }
    EXPECT_LT(verify::max_abs_diff(regional(), verify::perceptron(concat, w_.context_pair)), 1e-5);
}

TEST_F(PromptTest, ContextualFeaturesEdgeCases) {
    EXPECT_EQ(contextual_features(scene_.detections, {}, w_.context_pair).dims(), (Dims{0, 16}));
    Mlp zero = zero_mlp(32, 16);
    zero.second.bias = Tensor::filled({16}, -1.5f);
    const Tensor biased = contextual_features(scene_.detections, pairs_, zero);
    for (float v : biased.values()) EXPECT_EQ(v, -1.5f);
    const PairIndex bad[] = {{0, 99}};
    EXPECT_EQ(error_kind_of([&] { contextual_features(scene_.detections, bad, w_.context_pair); }), ErrorKind::Index);
}

TEST_F(PromptTest, GlobalContextIsMeanPoolThenAffine) {
    const Tensor flat = scene_.context.flat_spatial();
    verify::Matrix pooled(1, std::vector<double>(flat.cols(), 0.0));
    for (std::size_t r = 0; r < flat.rows(); ++r)
        for (std::size_t c = 0; c < flat.cols(); ++c) pooled[0][c] += flat.at(r, c) / static_cast<double>(flat.rows());
    const Tensor g = global();
    EXPECT_EQ(g.dims(), (Dims{16}));
    EXPECT_LT(verify::max_abs_diff(g.reshaped({1, 16}), verify::affine(pooled, w_.global_proj)), 1e-5);
}

TEST_F(PromptTest, GlobalContextOfConstantGrid) {
    const Tensor grid = Tensor::filled({12, 16}, 0.75f);
    const Tensor g = global_context(grid, w_.global_proj);
    const Tensor direct = ops::linear(Tensor::filled({1, 16}, 0.75f), w_.global_proj);
    for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(g[c], direct[c], 1e-6);
    const Tensor zeroed = global_context(grid, zero_linear(16, 16));
    for (float v : zeroed.values()) EXPECT_EQ(v, 0.0f);
}

TEST_F(PromptTest, PromptRowsDependOnlyOnObjectCategory) {
    Scene scene = scene_;
    scene.detections.push_back(scene.detections[1]);
    scene.detections.back().box = Box{1, 1, 2, 2};
    scene.detections.back().feature.assign(16, 0.0f);
    const std::size_t n = scene.detections.size();
    const PairIndex pairs[] = {{0, 1}, {0, n - 1}};
    const Tensor m = encode_prompts(scene.detections, pairs, w_.prompt, w_.object_text);
    for (std::size_t c = 0; c < m.cols(); ++c) EXPECT_EQ(m.at(0, c), m.at(1, c));
}

TEST_F(PromptTest, PromptsMatchOracle) {
    EXPECT_LT(verify::max_abs_diff(m0(), prompt_oracle(pairs_, w_.prompt)), 1e-5);
}

TEST_F(PromptTest, ActTokensFlowIntoRows) {
    PromptWeights zeroed = w_.prompt;
    zeroed.act = Tensor::zeros(zeroed.act.dims());
    const Tensor a = m0();
    const Tensor b = encode_prompts(scene_.detections, pairs_, zeroed, w_.object_text);
    EXPECT_FALSE(a.bitwise_equal(b));
    EXPECT_LT(verify::max_abs_diff(b, prompt_oracle(pairs_, zeroed)), 1e-5);
}

TEST_F(PromptTest, PromptShapeChecks) {
    PromptWeights bad = w_.prompt;
    bad.person = Tensor::zeros({3});
    EXPECT_EQ(error_kind_of([&] { encode_prompts(scene_.detections, pairs_, bad, w_.object_text); }), ErrorKind::Shape);
}

TEST_F(PromptTest, ContextualDecoderMatchesBlockOracle) {
    const Tensor m = m0(), g = global(), d = regional();
    const std::size_t rows = m.rows();
    verify::Matrix zeros(rows, std::vector<double>(16, 0.0));
    verify::Matrix global_rows(rows, verify::to_vector(g));
    const auto m1 = verify::block_oracle(verify::to_matrix(m), zeros, global_rows, zeros, w_.contextual.blocks[0], 2);
    const auto m2 = verify::block_oracle(m1, zeros, verify::to_matrix(d), zeros, w_.contextual.blocks[1], 2);
    EXPECT_LT(verify::max_abs_diff(run_contextual_decoder(m, g, d, w_.contextual, 2), m2), 1e-5);
}

TEST_F(PromptTest, SinglePairGlobalWeightIsOne) {
    const std::vector<PairIndex> one{pairs_.front()};
    const Tensor m = encode_prompts(scene_.detections, one, w_.prompt, w_.object_text);
    const Tensor d = contextual_features(scene_.detections, one, w_.context_pair);
    AttentionTrace trace;
    run_contextual_decoder(m, global(), d, w_.contextual, 2, &trace);
    // block 1: self heads, cross heads; block 2: self heads, cross heads
    ASSERT_EQ(trace.weights.size(), 8u);
    for (std::size_t h = 2; h < 4; ++h) {
        ASSERT_EQ(trace.weights[h].dims(), (Dims{1, 1}));
        EXPECT_EQ(trace.weights[h].at(0, 0), 1.0f);
    }
}

TEST_F(PromptTest, ZeroGlobalAndZeroValuesReduceToSelfStream) {
    // With V_g = 0 and a zero value projection in block 1's cross-attention, the
    // cross output is norm(0 + self) and M1 becomes a function of the self stream alone.
    DecoderWeights w = w_.contextual;
    w.blocks[0].cross_attn.value = zero_linear(16, 16);
    w.blocks[0].cross_attn.output = zero_linear(16, 16);
    const Tensor m = m0();
    const std::size_t rows = m.rows();
    const Tensor zeros = Tensor::zeros({rows, 16});
    const Tensor self = attention(m, zeros, m, zeros, m, w.blocks[0].self_attn, 2);
    const Tensor cross = ops::layer_norm(self, w.blocks[0].cross_attn.norm_gain, w.blocks[0].cross_attn.norm_bias);
    const Tensor m1 = ops::layer_norm(ops::add(cross, ops::mlp(cross, w.blocks[0].ffn)), w.blocks[0].norm_gain,
                                      w.blocks[0].norm_bias);
    const Tensor want = decoder_block(m1, zeros, regional(), zeros, w.blocks[1], 2);
    const Tensor got = run_contextual_decoder(m, Tensor::zeros({16}), regional(), w, 2);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-6);
}

TEST_F(PromptTest, ContextualDecoderEdgeCases) {
    const Tensor out =
        run_contextual_decoder(Tensor::zeros({0, 16}), global(), Tensor::zeros({0, 16}), w_.contextual, 2);
    EXPECT_EQ(out.dims(), (Dims{0, 16}));
    EXPECT_EQ(error_kind_of([&] { run_contextual_decoder(m0(), global(), Tensor::zeros({1, 16}), w_.contextual, 2); }),
              ErrorKind::Shape);
    DecoderWeights one = w_.contextual;
    one.blocks.pop_back();
    EXPECT_EQ(error_kind_of([&] { run_contextual_decoder(m0(), global(), regional(), one, 2); }), ErrorKind::Config);
}

TEST_F(PromptTest, PairPermutationPermutesOutputRows) {
    std::vector<PairIndex> reversed(pairs_.rbegin(), pairs_.rend());
    const auto run = [&](const std::vector<PairIndex>& p) {
        return run_contextual_decoder(encode_prompts(scene_.detections, p, w_.prompt, w_.object_text), global(),
                                      contextual_features(scene_.detections, p, w_.context_pair), w_.contextual, 2);
    };
    const Tensor a = run(pairs_), b = run(reversed);
    const std::size_t m = pairs_.size();
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < 16; ++c) EXPECT_NEAR(a.at(r, c), b.at(m - 1 - r, c), 1e-5);
}

TEST_F(PromptTest, RepeatedCallsAreBitIdentical) {
    const Tensor a = run_contextual_decoder(m0(), global(), regional(), w_.contextual, 2);
    const Tensor b = run_contextual_decoder(m0(), global(), regional(), w_.contextual, 2);
    EXPECT_TRUE(a.bitwise_equal(b));
}

TEST_F(PromptTest, SemanticHead) {
    const Tensor m2 = run_contextual_decoder(m0(), global(), regional(), w_.contextual, 2);
    const Tensor logits = semantic_logits(m2, w_.semantic_head);
    EXPECT_EQ(logits.dims(), (Dims{pairs_.size(), 8}));
    EXPECT_LT(verify::max_abs_diff(logits, verify::affine(verify::to_matrix(m2), w_.semantic_head)), 1e-5);
    const Tensor zeroed = semantic_logits(m2, zero_linear(16, 8));
    for (float v : zeroed.values()) EXPECT_EQ(v, 0.0f);
    EXPECT_EQ(semantic_logits(Tensor::zeros({0, 16}), w_.semantic_head).dims(), (Dims{0, 8}));
}

}  // namespace
}  // namespace relhoi
