#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "relhoi/categories.hpp"
#include "relhoi/config.hpp"
#include "relhoi/fusion.hpp"
#include "relhoi/scene.hpp"
#include "relhoi/tokens.hpp"
#include "relhoi/weights.hpp"

namespace relhoi {

// Switches individual streams off. A disabled stream contributes nothing,
// which is the same as running it with a zero fusion weight.
struct StreamToggles {
    bool ternary = true;
    bool semantic = true;
};

// Every intermediate of one forward pass, kept for tests and tooling.
struct SceneTrace {
    EnrichedUnary enriched;
    PairSet pairs;
    TripletSet triplets;
    Tensor binary_logits;    // y_tilde  [m x c]
    Tensor ternary_logits;   // y'       [r x c]
    Tensor refined_logits;   // y_hat    [m x c]
    Tensor semantic_logits;  // y_dot    [m x c]
    Tensor fused_logits;     // y_hat'   [m x c]
};

struct SceneOutput {
    std::string image_id;
    SceneTrace trace;
    Tensor scores;  // [m x c]
    std::vector<ScoredInteraction> interactions;
};

struct SceneLoss {
    FocalLoss focal;  // over y_hat', grad is d loss / d y_hat'
    Tensor fused_logits;
    std::vector<PairIndex> pairs;
    // Gradients w.r.t. each stream's logits, row-major.
    std::vector<double> grad_binary;    // [m x c]
    std::vector<double> grad_ternary;   // [r x c]
    std::vector<double> grad_semantic;  // [m x c]
};

struct BatchLoss {
    double loss = 0;
    double unnormalized = 0;
    std::size_t positives = 0;
    std::vector<SceneLoss> scenes;
};

// Immutable engine state: config, category table and weights. Safe to share
// across threads; every method is const.
class Engine {
public:
    Engine(EngineConfig config, CategoryTable categories, ModelWeights weights, std::string weights_digest);

    // Loads the config, the category table it references, then the weights.
    static Engine load(const std::filesystem::path& config_path, const std::filesystem::path& weights_path);

    const EngineConfig& config() const noexcept { return config_; }
    const CategoryTable& categories() const noexcept { return categories_; }
    const ModelWeights& weights() const noexcept { return weights_; }
    const std::string& weights_digest() const noexcept { return digest_; }

    // Full forward pass with explicit fusion coefficients.
    SceneOutput run(const Scene& scene, const KnowledgeBank& bank, const FusionConfig& fusion,
                    StreamToggles toggles = {}) const;

    // Forward pass with the configured inference coefficients.
    std::vector<ScoredInteraction> infer_scene(const Scene& scene, const KnowledgeBank& bank) const;

    // Focal loss over y_hat' with training-mode settings. Labels follow the
    // canonical pair order of the scene.
    SceneLoss loss_on_scene(const Scene& scene, const KnowledgeBank& bank, const LabelMatrix& labels) const;

    // Sums unnormalized losses over scenes and divides by max(1, total positives).
    BatchLoss loss_on_batch(std::span<const Scene> scenes, const KnowledgeBank& bank,
                            std::span<const LabelMatrix> labels) const;

private:
    void check_scene(const Scene& scene) const;

    EngineConfig config_;
    CategoryTable categories_;
    ModelWeights weights_;
    std::string digest_;
};

// Effective hyperparameters and provenance written next to predictions.
struct PredictionMetadata {
    FusionConfig fusion;
    FocalConfig focal;
    std::string weights_hash;
    std::string engine_version = kEngineVersion;
    int layout_version = kWeightsLayoutVersion;

    nlohmann::json to_json() const;
    static PredictionMetadata from_json(const nlohmann::json& j);
};

struct ScenePredictions {
    std::string image_id;
    std::vector<ScoredInteraction> interactions;
};

// Loads and runs each scene file. Work is spread over `threads` workers but
// results keep the input order; the first failing scene (in input order)
// rethrows its error.
std::vector<ScenePredictions> infer_scene_files(const Engine& engine,
                                                std::span<const std::filesystem::path> scene_paths,
                                                const KnowledgeBank& bank, const FusionConfig& fusion,
                                                std::size_t threads = 1);

nlohmann::json predictions_to_json(const PredictionMetadata& metadata, std::span<const ScenePredictions> scenes);
void write_predictions(const std::filesystem::path& path, const PredictionMetadata& metadata,
                       std::span<const ScenePredictions> scenes);
PredictionMetadata read_prediction_metadata(const std::filesystem::path& path);

}  // namespace relhoi
