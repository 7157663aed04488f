#include "relhoi/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>

#include <nlohmann/json.hpp>

#include "relhoi/container.hpp"
#include "relhoi/decoder.hpp"
#include "relhoi/error.hpp"
#include "relhoi/json_io.hpp"
#include "relhoi/prompt.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "pipeline";

nlohmann::json box_json(const Box& b) { return {b.x1, b.y1, b.x2, b.y2}; }

std::vector<PairConfidence> pair_confidences(std::span<const Detection> detections,
                                             std::span<const PairIndex> pairs) {
    std::vector<PairConfidence> out;
    out.reserve(pairs.size());
    for (const auto& [i, j] : pairs) out.push_back({detections[i].score, detections[j].score});
    return out;
}

}  // namespace

Engine::Engine(EngineConfig config, CategoryTable categories, ModelWeights weights, std::string weights_digest)
    : config_(std::move(config)),
      categories_(std::move(categories)),
      weights_(std::move(weights)),
      digest_(std::move(weights_digest)) {
    config_.validate();
    if (config_.layout_version != kWeightsLayoutVersion) {
        fail(ErrorKind::Config, kModule,
             "config layout_version " + std::to_string(config_.layout_version) + " does not match engine layout " +
                 std::to_string(kWeightsLayoutVersion));
    }
}

Engine Engine::load(const std::filesystem::path& config_path, const std::filesystem::path& weights_path) {
    EngineConfig config = load_engine_config(config_path);
    CategoryTable categories = load_categories(config.categories_path);
    LoadedWeights loaded = load_weights(weights_path, config, categories.num_objects(), categories.num_actions());
    return Engine(std::move(config), std::move(categories), std::move(loaded.model), std::move(loaded.digest));
}

void Engine::check_scene(const Scene& scene) const {
    validate_scene(scene, categories_, config_.dims.unary);
    if (scene.context.width() != config_.dims.model) {
        fail(ErrorKind::Shape, kModule,
             "scene '" + scene.image_id + "': context width " + std::to_string(scene.context.width()) +
                 " differs from dims.model " + std::to_string(config_.dims.model));
    }
}

SceneOutput Engine::run(const Scene& scene, const KnowledgeBank& bank, const FusionConfig& fusion,
                        StreamToggles toggles) const {
    fusion.validate();
    check_scene(scene);
    const auto& w = weights_;
    const std::size_t heads = config_.heads;
    const std::span<const Detection> dets = scene.detections;

    SceneOutput out;
    out.image_id = scene.image_id;
    SceneTrace& t = out.trace;

    t.enriched = enrich_unary(dets, w.object_text, w.unary);
    t.pairs = build_pairs(dets, categories_, t.enriched, w.pair, scene.size, w.binary_pos);
    static const KnowledgeBank kEmptyBank;
    t.triplets = build_triplets(dets, categories_, t.enriched, toggles.ternary ? bank : kEmptyBank, t.pairs,
                                w.triplet, scene.size, w.ternary_pos);

    const Tensor ve = scene.context.flat_spatial();
    const Tensor s = scene.context.flat_positions();

    const DecoderConfig binary_cfg{config_.dims.model, heads, config_.blocks.binary, DecoderRole::Binary};
    const DecoderConfig ternary_cfg{config_.dims.model, heads, config_.blocks.ternary, DecoderRole::Ternary};
    t.binary_logits = classify(run_binary_decoder(t.pairs.tokens, t.pairs.positions, ve, s, w.binary, binary_cfg),
                               w.binary_head);
    t.ternary_logits = classify(
        run_ternary_decoder(t.triplets.tokens, t.triplets.positions, ve, s, w.ternary, ternary_cfg), w.ternary_head);
    t.refined_logits = fuse_ternary(t.binary_logits, t.ternary_logits, t.triplets.pair_assignment, fusion.alpha);

    const std::size_t m = t.pairs.size();
    const std::size_t c = categories_.num_actions();
    if (toggles.semantic) {
        const Tensor regional = contextual_features(dets, t.pairs.pairs, w.context_pair);
        const Tensor global = global_context(ve, w.global_proj);
        const Tensor m0 = encode_prompts(dets, t.pairs.pairs, w.prompt, w.object_text);
        const Tensor m2 = run_contextual_decoder(m0, global, regional, w.contextual, heads);
        t.semantic_logits = semantic_logits(m2, w.semantic_head);
        t.fused_logits = fuse_semantic(t.refined_logits, t.semantic_logits, fusion.beta);
    } else {
        t.semantic_logits = Tensor::zeros({m, c});
        t.fused_logits = t.refined_logits;
    }

    const auto confidences = pair_confidences(dets, t.pairs.pairs);
    out.scores = final_scores(t.fused_logits, confidences, fusion.lambda);

    out.interactions.reserve(m);
    for (std::size_t l = 0; l < m; ++l) {
        const auto [i, j] = t.pairs.pairs[l];
        const auto row = out.scores.row(l);
        out.interactions.push_back(
            {t.pairs.pairs[l], dets[i].box, dets[j].box, dets[j].category, std::vector<float>(row.begin(), row.end())});
    }
    return out;
}

std::vector<ScoredInteraction> Engine::infer_scene(const Scene& scene, const KnowledgeBank& bank) const {
    return run(scene, bank, config_.fusion).interactions;
}

SceneLoss Engine::loss_on_scene(const Scene& scene, const KnowledgeBank& bank, const LabelMatrix& labels) const {
    FusionConfig training = config_.fusion;
    training.lambda = config_.fusion.lambda_train;
    SceneOutput fwd = run(scene, bank, training);
    const Tensor& logits = fwd.trace.fused_logits;
    if (labels.rows() != logits.rows() || labels.cols() != categories_.num_actions()) {
        fail(ErrorKind::Shape, kModule,
             "scene '" + scene.image_id + "': labels are " + std::to_string(labels.rows()) + "x" +
                 std::to_string(labels.cols()) + " but the scene has " + std::to_string(logits.rows()) +
                 " pairs and " + std::to_string(categories_.num_actions()) + " actions");
    }
    SceneLoss out;
    out.focal = focal_loss(logits, labels, config_.focal.gamma, config_.focal.alpha);
    out.fused_logits = logits;
    out.pairs = fwd.trace.pairs.pairs;

    const std::size_t c = categories_.num_actions();
    out.grad_binary = out.focal.grad;
    out.grad_semantic.resize(out.focal.grad.size());
    for (std::size_t k = 0; k < out.focal.grad.size(); ++k) out.grad_semantic[k] = config_.fusion.beta * out.focal.grad[k];
    const auto& assignment = fwd.trace.triplets.pair_assignment;
    out.grad_ternary.resize(assignment.size() * c);
    for (std::size_t o = 0; o < assignment.size(); ++o)
        for (std::size_t a = 0; a < c; ++a)
            out.grad_ternary[o * c + a] = config_.fusion.alpha * out.focal.grad[assignment[o] * c + a];
    return out;
}

BatchLoss Engine::loss_on_batch(std::span<const Scene> scenes, const KnowledgeBank& bank,
                                std::span<const LabelMatrix> labels) const {
    if (scenes.size() != labels.size()) fail(ErrorKind::Shape, kModule, "one label matrix per scene required");
    BatchLoss out;
    for (std::size_t k = 0; k < scenes.size(); ++k) {
        out.scenes.push_back(loss_on_scene(scenes[k], bank, labels[k]));
        out.unnormalized += out.scenes.back().focal.unnormalized;
        out.positives += out.scenes.back().focal.positives;
    }
    out.loss = out.unnormalized / static_cast<double>(std::max<std::size_t>(1, out.positives));
    return out;
}

std::vector<ScenePredictions> infer_scene_files(const Engine& engine,
                                                std::span<const std::filesystem::path> scene_paths,
                                                const KnowledgeBank& bank, const FusionConfig& fusion,
                                                std::size_t threads) {
    const std::size_t n = scene_paths.size();
    std::vector<ScenePredictions> results(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            try {
                const Scene scene = load_scene(scene_paths[k], engine.categories(), engine.config().dims.unary);
                results[k] = {scene.image_id, engine.run(scene, bank, fusion).interactions};
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
    };
    const std::size_t workers = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(n, 1));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < workers; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return results;
}

nlohmann::json PredictionMetadata::to_json() const {
    return {{"alpha", fusion.alpha},
            {"beta", fusion.beta},
            {"lambda", fusion.lambda},
            {"lambda_train", fusion.lambda_train},
            {"gamma", focal.gamma},
            {"focal_alpha", focal.alpha},
            {"weights_hash", weights_hash},
            {"engine_version", engine_version},
            {"layout_version", layout_version}};
}

PredictionMetadata PredictionMetadata::from_json(const nlohmann::json& j) {
    PredictionMetadata m;
    m.fusion.alpha = require_number(j, "alpha", kModule, "metadata");
    m.fusion.beta = require_number(j, "beta", kModule, "metadata");
    m.fusion.lambda = require_number(j, "lambda", kModule, "metadata");
    m.fusion.lambda_train = require_number(j, "lambda_train", kModule, "metadata");
    m.focal.gamma = require_number(j, "gamma", kModule, "metadata");
    m.focal.alpha = require_number(j, "focal_alpha", kModule, "metadata");
    m.weights_hash = require_field(j, "weights_hash", kModule, "metadata").get<std::string>();
    m.engine_version = require_field(j, "engine_version", kModule, "metadata").get<std::string>();
    m.layout_version = require_field(j, "layout_version", kModule, "metadata").get<int>();
    return m;
}

nlohmann::json predictions_to_json(const PredictionMetadata& metadata, std::span<const ScenePredictions> scenes) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& scene : scenes) {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : scene.interactions) {
            rows.push_back({{"pair", {r.pair.first, r.pair.second}},
                            {"human_box", box_json(r.human_box)},
                            {"object_box", box_json(r.object_box)},
                            {"object_category", r.object_category},
                            {"action_scores", r.scores}});
        }
        images.push_back({{"image_id", scene.image_id}, {"predictions", rows}});
    }
    return {{"metadata", metadata.to_json()}, {"images", images}};
}

void write_predictions(const std::filesystem::path& path, const PredictionMetadata& metadata,
                       std::span<const ScenePredictions> scenes) {
    std::set<std::string> ids;
    for (const auto& s : scenes)
        if (!ids.insert(s.image_id).second) {
            fail(ErrorKind::Validation, kModule, "duplicate image id '" + s.image_id + "' across scenes");
        }
    write_json_file(path, predictions_to_json(metadata, scenes), kModule);
}

PredictionMetadata read_prediction_metadata(const std::filesystem::path& path) {
    const auto j = read_json_file(path, kModule);
    return PredictionMetadata::from_json(require_field(j, "metadata", kModule, "prediction file"));
}

}  // namespace relhoi
