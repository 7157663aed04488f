#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "relhoi/decoder.hpp"
#include "relhoi/geometry.hpp"
#include "relhoi/scene.hpp"
#include "relhoi/tensor.hpp"
#include "relhoi/weights.hpp"

namespace relhoi {

// d_l = mlp(u_i | u_j) on the raw detector features. [m x C']
Tensor contextual_features(std::span<const Detection> detections, std::span<const PairIndex> pairs,
                           const Mlp& context_mlp);

// V_g = mean over grid cells of V_e, then a linear projection. [C']
Tensor global_context(const Tensor& flat_spatial, const Linear& projection);

// Stand-in text encoder for "{prefix} person [ACT] {object}":
//   row l = proj(mean(prefix) | mean(act) | person | text[c_j])
// so each row depends only on the pair's object category and the prompt
// weights. Real text features can replace `object_text` via the container.
Tensor encode_prompts(std::span<const Detection> detections, std::span<const PairIndex> pairs,
                      const PromptWeights& prompt, const Tensor& object_text);

// Block 1 injects V_g (repeated m times) and block 2 the regional features D
// at the cross-attention layer. All positional streams are zero.
Tensor run_contextual_decoder(const Tensor& m0, const Tensor& global, const Tensor& regional,
                              const DecoderWeights& weights, std::size_t heads, AttentionTrace* trace = nullptr);

inline Tensor semantic_logits(const Tensor& m2, const Linear& head) { return classify(m2, head); }

}  // namespace relhoi
