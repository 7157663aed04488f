#include "relhoi/decoder.hpp"

#include <cmath>
#include <string>

#include "relhoi/error.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "relational-decoders";

void require_width(const Tensor& t, std::size_t width, const char* what) {
    if (t.rank() != 2 || t.cols() != width) {
        fail(ErrorKind::Shape, kModule,
             std::string(what) + " has dims " + dims_to_string(t.dims()) + ", expected width " + std::to_string(width));
    }
}

}  // namespace

void DecoderConfig::validate() const {
    if (blocks == 0) fail(ErrorKind::Config, kModule, "decoder needs at least one block");
    if (heads == 0 || width == 0 || width % heads != 0) {
        fail(ErrorKind::Config, kModule, "width " + std::to_string(width) + " not divisible by heads " + std::to_string(heads));
    }
}

Tensor attention(const Tensor& content_q, const Tensor& pos_q, const Tensor& content_k, const Tensor& pos_k,
                 const Tensor& value, const AttentionWeights& weights, std::size_t heads, AttentionTrace* trace) {
    const std::size_t width = weights.query.in_features();
    require_width(content_q, width, "content query");
    require_width(pos_q, width, "positional query");
    require_width(content_k, width, "content key");
    require_width(pos_k, width, "positional key");
    require_width(value, width, "value");
    if (pos_q.rows() != content_q.rows()) fail(ErrorKind::Shape, kModule, "positional query rows differ from content");
    if (pos_k.rows() != content_k.rows() || value.rows() != content_k.rows()) {
        fail(ErrorKind::Shape, kModule, "key/value row counts differ");
    }
    if (heads == 0 || width % heads != 0) fail(ErrorKind::Config, kModule, "width not divisible by heads");

    const Tensor q = ops::linear(ops::add(content_q, pos_q), weights.query);
    const Tensor k = ops::linear(ops::add(content_k, pos_k), weights.key);
    const Tensor v = ops::linear(value, weights.value);

    const std::size_t head_dim = width / heads;
    const float inv_scale = static_cast<float>(1.0 / std::sqrt(static_cast<double>(head_dim)));
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const Tensor qh = ops::slice_cols(q, h * head_dim, (h + 1) * head_dim);
        const Tensor kh = ops::slice_cols(k, h * head_dim, (h + 1) * head_dim);
        const Tensor vh = ops::slice_cols(v, h * head_dim, (h + 1) * head_dim);
        const Tensor scores = ops::scale(ops::matmul(qh, ops::transpose(kh)), inv_scale);
        Tensor probs = ops::softmax_rows(scores);
        head_outputs.push_back(ops::matmul(probs, vh));
        if (trace) trace->weights.push_back(std::move(probs));
    }
    const Tensor mixed = ops::linear(ops::concat_cols(head_outputs), weights.output);
    return ops::layer_norm(ops::add(mixed, content_q), weights.norm_gain, weights.norm_bias);
}

Tensor decoder_block(const Tensor& queries, const Tensor& query_pos, const Tensor& memory, const Tensor& memory_pos,
                     const DecoderBlockWeights& weights, std::size_t heads, AttentionTrace* trace) {
    const Tensor self = attention(queries, query_pos, queries, query_pos, queries, weights.self_attn, heads, trace);
    const Tensor cross = attention(self, query_pos, memory, memory_pos, memory, weights.cross_attn, heads, trace);
    return ops::layer_norm(ops::add(cross, ops::mlp(cross, weights.ffn)), weights.norm_gain, weights.norm_bias);
}

Tensor run_relation_decoder(const Tensor& tokens, const Tensor& positions, const Tensor& image_features,
                            const Tensor& image_positions, const DecoderWeights& weights, const DecoderConfig& config,
                            AttentionTrace* trace) {
    config.validate();
    if (weights.blocks.size() != config.blocks) {
        fail(ErrorKind::Config, kModule,
             "decoder has " + std::to_string(weights.blocks.size()) + " weight blocks, config asks for " +
                 std::to_string(config.blocks));
    }
    require_width(tokens, config.width, "decoder tokens");
    require_width(positions, config.width, "decoder positions");
    if (tokens.rows() != positions.rows()) fail(ErrorKind::Shape, kModule, "tokens and positions not row-aligned");
    if (tokens.rows() == 0) return Tensor::zeros({0, config.width});

    Tensor x = tokens;
    for (const auto& block : weights.blocks) {
        x = decoder_block(x, positions, image_features, image_positions, block, config.heads, trace);
    }
    return x;
}

Tensor classify(const Tensor& decoded, const Linear& head) {
    if (decoded.rank() != 2 || decoded.cols() != head.in_features()) {
        fail(ErrorKind::Shape, kModule,
             "classifier input " + dims_to_string(decoded.dims()) + " vs head " + dims_to_string(head.weight.dims()));
    }
    return ops::linear(decoded, head);
}

}  // namespace relhoi
