#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "relhoi/geometry.hpp"

namespace relhoi {

struct GroundTruthTriplet {
    Box human_box;
    Box object_box;
    int object_category = 0;
    int action = 0;
};

// One prediction for a single (action, object) class.
struct ClassPrediction {
    Box human_box;
    Box object_box;
    int object_category = 0;
    int action = 0;
    double score = 0;
};

inline constexpr double kDefaultIouThreshold = 0.5;

// Best still-unmatched ground truth for `prediction`: same object category
// and action, human and object IoU both strictly above the threshold. Among
// candidates the largest min(IoU_h, IoU_o) wins; ties go to the lower index.
std::optional<std::size_t> match(const ClassPrediction& prediction, std::span<const GroundTruthTriplet> ground_truths,
                                 const std::vector<bool>& taken,
                                 double iou_threshold = kDefaultIouThreshold);

// Greedy per-image matching in descending score order (stable on ties).
// Returns a TP flag per input prediction.
std::vector<bool> match_image(std::span<const ClassPrediction> predictions,
                              std::span<const GroundTruthTriplet> ground_truths,
                              double iou_threshold = kDefaultIouThreshold);

struct RankedHit {
    double score = 0;
    bool true_positive = false;
};

// All-point interpolated AP: hits are ranked by descending score (stable),
// and AP = sum over TP ranks of the precision envelope at that rank / num_gt.
// Returns nullopt when num_gt == 0 (class excluded from the mean).
std::optional<double> average_precision(std::span<const RankedHit> hits, std::size_t num_gt);

struct ClassKey {
    int action = 0;
    int object_category = 0;
    auto operator<=>(const ClassKey&) const = default;
};

struct ClassReport {
    double ap = 0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t ground_truths = 0;
};

struct APReport {
    std::map<ClassKey, ClassReport> classes;  // only classes with >= 1 ground truth
    double mean_ap = 0;
    std::size_t true_positives = 0;
    std::size_t false_positives = 0;
    std::size_t ground_truths = 0;

    nlohmann::json to_json() const;
};

// Per-image prediction rows as written by `infer`.
struct PredictionRow {
    Box human_box;
    Box object_box;
    int object_category = 0;
    std::vector<float> action_scores;
};

struct ImagePredictions {
    std::string image_id;
    std::vector<PredictionRow> rows;
};

struct ImageGroundTruth {
    std::string image_id;
    std::vector<GroundTruthTriplet> triplets;
};

struct GroundTruthSet {
    std::size_t num_actions = 0;
    std::vector<ImageGroundTruth> images;
};

// Aggregates per (action, object) class over all images. Image order and
// per-image row order do not affect the result.
APReport evaluate(std::span<const ImagePredictions> predictions, const GroundTruthSet& ground_truth,
                  double iou_threshold = kDefaultIouThreshold);

GroundTruthSet load_ground_truth(const std::filesystem::path& path);
void write_ground_truth(const std::filesystem::path& path, const GroundTruthSet& gt);

// Reads `images[].predictions[]` from a prediction file. A ground-truth file
// is accepted too: each annotation becomes a row scoring its actions at 1.
std::vector<ImagePredictions> load_predictions(const std::filesystem::path& path);

}  // namespace relhoi
