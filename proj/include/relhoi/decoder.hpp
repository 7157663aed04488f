#pragma once

#include <cstddef>
#include <vector>

#include "relhoi/tensor.hpp"
#include "relhoi/weights.hpp"

namespace relhoi {

enum class DecoderRole { Binary, Ternary, Contextual };

struct DecoderConfig {
    std::size_t width = 0;
    std::size_t heads = 1;
    std::size_t blocks = 1;
    DecoderRole role = DecoderRole::Binary;

    void validate() const;
};

// Optional instrumentation: the per-head softmax weights of every attention
// call, in call order. Each entry is [queries x keys].
struct AttentionTrace {
    std::vector<Tensor> weights;
};

// Q = (content_q + pos_q) Wq, K = (content_k + pos_k) Wk, V = value Wv.
// Per head softmax(Q K^T / sqrt(d_head)) V, heads concatenated and output
// projected, then layer_norm(projected + content_q).
//
// The residual joins the query-side content stream rather than the value:
// for cross-attention the value has one row per image cell while the
// output has one row per query, so only the query stream fits.
Tensor attention(const Tensor& content_q, const Tensor& pos_q, const Tensor& content_k, const Tensor& pos_k,
                 const Tensor& value, const AttentionWeights& weights, std::size_t heads,
                 AttentionTrace* trace = nullptr);

// One block: self-attention over (queries, positions), cross-attention into
// (memory + memory_pos) with values memory, then norm(x + ffn(x)).
Tensor decoder_block(const Tensor& queries, const Tensor& query_pos, const Tensor& memory, const Tensor& memory_pos,
                     const DecoderBlockWeights& weights, std::size_t heads, AttentionTrace* trace = nullptr);

// Shared by the binary (G0, X) and ternary (T0, W) stacks: every block
// attends into the flattened image grid (Ve, S).
Tensor run_relation_decoder(const Tensor& tokens, const Tensor& positions, const Tensor& image_features,
                            const Tensor& image_positions, const DecoderWeights& weights, const DecoderConfig& config,
                            AttentionTrace* trace = nullptr);

inline Tensor run_binary_decoder(const Tensor& g0, const Tensor& x, const Tensor& ve, const Tensor& s,
                                 const DecoderWeights& weights, const DecoderConfig& config,
                                 AttentionTrace* trace = nullptr) {
    return run_relation_decoder(g0, x, ve, s, weights, config, trace);
}

inline Tensor run_ternary_decoder(const Tensor& t0, const Tensor& w, const Tensor& ve, const Tensor& s,
                                  const DecoderWeights& weights, const DecoderConfig& config,
                                  AttentionTrace* trace = nullptr) {
    return run_relation_decoder(t0, w, ve, s, weights, config, trace);
}

// Plain affine classifier head, no activation: [k x width] -> [k x c].
Tensor classify(const Tensor& decoded, const Linear& head);

}  // namespace relhoi
