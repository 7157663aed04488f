#include "relhoi/prompt.hpp"

#include <string>

#include "relhoi/error.hpp"
#include "relhoi/tokens.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "prompt-context";

}  // namespace

Tensor contextual_features(std::span<const Detection> detections, std::span<const PairIndex> pairs,
                           const Mlp& context_mlp) {
    const std::size_t in = context_mlp.first.in_features();
    if (in % 2 != 0) fail(ErrorKind::Shape, kModule, "context mlp input must be 2C");
    const Tensor unary = unary_matrix(detections, in / 2);
    std::vector<std::size_t> hs, os;
    for (const auto& [i, j] : pairs) {
        if (i >= detections.size() || j >= detections.size()) fail(ErrorKind::Index, kModule, "pair index out of range");
        hs.push_back(i);
        os.push_back(j);
    }
    const Tensor parts[] = {ops::gather_rows(unary, hs), ops::gather_rows(unary, os)};
    return ops::mlp(ops::concat_cols(parts), context_mlp);
}

Tensor global_context(const Tensor& flat_spatial, const Linear& projection) {
    if (flat_spatial.rank() != 2 || flat_spatial.rows() == 0) {
        fail(ErrorKind::Shape, kModule, "global context needs a non-empty feature grid");
    }
    const Tensor pooled = ops::mean_rows(flat_spatial);
    const Tensor row = ops::linear(pooled.reshaped({1, pooled.size()}), projection);
    return row.reshaped({row.cols()});
}

Tensor encode_prompts(std::span<const Detection> detections, std::span<const PairIndex> pairs,
                      const PromptWeights& prompt, const Tensor& object_text) {
    const std::size_t E = object_text.cols();
    if (prompt.prefix.cols() != E || prompt.act.cols() != E || prompt.person.size() != E) {
        fail(ErrorKind::Shape, kModule, "prompt embeddings must share the text width");
    }
    if (prompt.projection.in_features() != 4 * E) fail(ErrorKind::Shape, kModule, "prompt projection input must be 4E");

    const Tensor prefix_mean = ops::mean_rows(prompt.prefix);
    const Tensor act_mean = ops::mean_rows(prompt.act);
    std::vector<float> rows;
    rows.reserve(pairs.size() * 4 * E);
    for (const auto& [i, j] : pairs) {
        if (j >= detections.size()) fail(ErrorKind::Index, kModule, "pair index out of range");
        const int c = detections[j].category;
        if (c < 0 || static_cast<std::size_t>(c) >= object_text.rows()) {
            fail(ErrorKind::Validation, kModule, "unknown object category " + std::to_string(c));
        }
        const auto obj = object_text.row(static_cast<std::size_t>(c));
        rows.insert(rows.end(), prefix_mean.values().begin(), prefix_mean.values().end());
        rows.insert(rows.end(), act_mean.values().begin(), act_mean.values().end());
        rows.insert(rows.end(), prompt.person.values().begin(), prompt.person.values().end());
        rows.insert(rows.end(), obj.begin(), obj.end());
    }
    return ops::linear(Tensor({pairs.size(), 4 * E}, std::move(rows)), prompt.projection);
}

Tensor run_contextual_decoder(const Tensor& m0, const Tensor& global, const Tensor& regional,
                              const DecoderWeights& weights, std::size_t heads, AttentionTrace* trace) {
    if (weights.blocks.size() != 2) fail(ErrorKind::Config, kModule, "contextual decoder needs exactly 2 blocks");
    if (m0.rank() != 2) fail(ErrorKind::Shape, kModule, "M0 must be a matrix");
    const std::size_t m = m0.rows(), width = m0.cols();
    if (global.rank() != 1 || global.size() != width) {
        fail(ErrorKind::Shape, kModule, "V_g must be a [" + std::to_string(width) + "] vector");
    }
    if (regional.rank() != 2 || regional.rows() != m || regional.cols() != width) {
        fail(ErrorKind::Shape, kModule,
             "regional features " + dims_to_string(regional.dims()) + " not aligned with M0 " + dims_to_string(m0.dims()));
    }
    DecoderConfig{width, heads, 2, DecoderRole::Contextual}.validate();
    if (m == 0) return Tensor::zeros({0, width});

    const Tensor zeros = Tensor::zeros({m, width});
    const Tensor global_rows = ops::repeat_row(global, m);
    const Tensor m1 = decoder_block(m0, zeros, global_rows, zeros, weights.blocks[0], heads, trace);
    return decoder_block(m1, zeros, regional, zeros, weights.blocks[1], heads, trace);
}

}  // namespace relhoi
