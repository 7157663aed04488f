#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "relhoi/config.hpp"
#include "relhoi/container.hpp"
#include "relhoi/tensor.hpp"

namespace relhoi {

// Bumped whenever tensor names, shapes or the spatial encoding layout change.
inline constexpr int kWeightsLayoutVersion = 1;
inline constexpr const char* kLayoutVersionTensor = "meta.layout_version";

struct AttentionWeights {
    Linear query;
    Linear key;
    Linear value;
    Linear output;
    Tensor norm_gain;
    Tensor norm_bias;
};

struct DecoderBlockWeights {
    AttentionWeights self_attn;
    AttentionWeights cross_attn;
    Mlp ffn;
    Tensor norm_gain;
    Tensor norm_bias;
};

struct DecoderWeights {
    std::vector<DecoderBlockWeights> blocks;
};

struct PromptWeights {
    Tensor prefix;  // [P x E]
    Tensor act;     // [A x E], the learnable [ACT] vectors
    Tensor person;  // [E]
    Linear projection;  // 4E -> C'
};

struct ModelWeights {
    Mlp unary;          // C + E -> D
    Mlp pair;           // 2D -> D
    Mlp triplet;        // 3D -> D
    Mlp binary_pos;     // 36 -> D
    Mlp ternary_pos;    // 108 -> D
    Mlp context_pair;   // 2C -> C'
    Linear global_proj;  // D -> C'
    DecoderWeights binary;
    DecoderWeights ternary;
    DecoderWeights contextual;
    Linear binary_head;    // D -> c
    Linear ternary_head;   // D -> c
    Linear semantic_head;  // C' -> c
    PromptWeights prompt;
    Tensor object_text;  // [num_objects x E], "a photo of a/an {object}"
};

enum class WeightInit { ScaledUniform, Ones, Zeros, Embedding, LayoutTag };

struct WeightSpec {
    std::string name;
    Dims dims;
    WeightInit init = WeightInit::ScaledUniform;
    std::size_t fan_in = 1;
};

// Every tensor the engine requires, in canonical container order.
std::vector<WeightSpec> weight_schema(const EngineConfig& config, std::size_t num_objects, std::size_t num_actions);

// Validates names, dims and layout tag against the schema, then binds.
ModelWeights assemble_weights(const NamedTensors& tensors, const EngineConfig& config, std::size_t num_objects,
                              std::size_t num_actions);

// All-zero tensors (norm gains at one) matching the schema; handy for tests.
NamedTensors zero_weight_tensors(const EngineConfig& config, std::size_t num_objects, std::size_t num_actions);

// Replaces the tensor called `name`; throws if absent or if dims differ.
void replace_tensor(NamedTensors& tensors, const std::string& name, Tensor value);

struct LoadedWeights {
    ModelWeights model;
    std::string digest;  // fnv1a over the container bytes
};

LoadedWeights load_weights(const std::filesystem::path& path, const EngineConfig& config, std::size_t num_objects,
                           std::size_t num_actions);

}  // namespace relhoi
