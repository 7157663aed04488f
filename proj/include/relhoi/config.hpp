#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace relhoi {

// Logit fusion and scoring coefficients.
struct FusionConfig {
    double alpha = 1.0;         // ternary stream weight
    double beta = 0.4;          // contextual prompt stream weight
    double lambda = 2.8;        // detection-confidence exponent at inference
    double lambda_train = 1.0;  // exponent used in training mode

    void validate() const;
};

struct FocalConfig {
    double gamma = 2.0;
    double alpha = 0.25;

    void validate() const;
};

enum class PrefixMode { Manual, Learned };

struct PromptConfig {
    PrefixMode prefix_mode = PrefixMode::Manual;
    std::vector<std::string> prefix_words = {"a", "photo", "of", "a"};
    std::size_t learned_prefix_length = 4;
    std::size_t act_length = 4;

    std::size_t prefix_length() const {
        return prefix_mode == PrefixMode::Manual ? prefix_words.size() : learned_prefix_length;
    }
};

struct ModelDims {
    std::size_t unary = 32;    // C, detector instance feature width
    std::size_t model = 32;    // D, binary/ternary decoder width
    std::size_t context = 32;  // C', contextual decoder width
    std::size_t text = 16;     // E, word/text embedding width
};

struct BlockCounts {
    std::size_t binary = 2;
    std::size_t ternary = 2;
    std::size_t contextual = 2;  // global block then regional block
};

struct EngineConfig {
    int layout_version = 1;
    ModelDims dims;
    std::size_t heads = 2;
    BlockCounts blocks;
    PromptConfig prompt;
    FusionConfig fusion;
    FocalConfig focal;
    std::filesystem::path categories_path = "categories.json";

    void validate() const;

    nlohmann::json to_json() const;
    // Relative categories paths are resolved against `base_dir`.
    static EngineConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
};

EngineConfig load_engine_config(const std::filesystem::path& path);
void write_engine_config(const std::filesystem::path& path, const EngineConfig& config);

inline constexpr const char* kEngineVersion = "relhoi 1.0.0";

}  // namespace relhoi
