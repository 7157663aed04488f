#include "relhoi/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

#include "relhoi/error.hpp"
#include "relhoi/json_io.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "evaluation";

std::vector<std::size_t> score_order(std::size_t n, const auto& score_of) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score_of(a) > score_of(b); });
    return order;
}

auto box_tuple(const Box& b) { return std::make_tuple(b.x1, b.y1, b.x2, b.y2); }

bool row_less(const PredictionRow& a, const PredictionRow& b) {
    const auto ka = std::make_tuple(box_tuple(a.human_box), box_tuple(a.object_box), a.object_category);
    const auto kb = std::make_tuple(box_tuple(b.human_box), box_tuple(b.object_box), b.object_category);
    if (ka != kb) return ka < kb;
    return a.action_scores < b.action_scores;
}

Box parse_box(const nlohmann::json& j, const std::string& ctx) {
    if (!j.is_array() || j.size() != 4) fail(ErrorKind::Validation, kModule, ctx + " must be [x1,y1,x2,y2]");
    Box b{j[0].get<float>(), j[1].get<float>(), j[2].get<float>(), j[3].get<float>()};
    try {
        validate_box(b, kModule);
    } catch (const Error& e) {
        fail(ErrorKind::Validation, kModule, ctx + ": " + e.detail());
    }
    return b;
}

int parse_nonnegative_int(const nlohmann::json& obj, const std::string& key, const std::string& ctx) {
    const auto& v = require_field(obj, key, kModule, ctx);
    if (!v.is_number_integer() || v.get<long long>() < 0) {
        fail(ErrorKind::Validation, kModule, ctx + "." + key + " must be a nonnegative integer");
    }
    return v.get<int>();
}

nlohmann::json box_json(const Box& b) { return {b.x1, b.y1, b.x2, b.y2}; }

}  // namespace

std::optional<std::size_t> match(const ClassPrediction& prediction, std::span<const GroundTruthTriplet> ground_truths,
                                 const std::vector<bool>& taken, double iou_threshold) {
    std::optional<std::size_t> best;
    double best_overlap = -1.0;
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
        if (taken[g]) continue;
        const auto& gt = ground_truths[g];
        if (gt.object_category != prediction.object_category || gt.action != prediction.action) continue;
        const double ih = iou(prediction.human_box, gt.human_box);
        const double io = iou(prediction.object_box, gt.object_box);
        if (!(ih > iou_threshold && io > iou_threshold)) continue;
        const double overlap = std::min(ih, io);
        if (overlap > best_overlap) {
            best_overlap = overlap;
            best = g;
        }
    }
    return best;
}

std::vector<bool> match_image(std::span<const ClassPrediction> predictions,
                              std::span<const GroundTruthTriplet> ground_truths, double iou_threshold) {
    std::vector<bool> tp(predictions.size(), false);
    std::vector<bool> taken(ground_truths.size(), false);
    const auto order = score_order(predictions.size(), [&](std::size_t i) { return predictions[i].score; });
    for (std::size_t idx : order) {
        if (const auto hit = match(predictions[idx], ground_truths, taken, iou_threshold)) {
            taken[*hit] = true;
            tp[idx] = true;
        }
    }
    return tp;
}

std::optional<double> average_precision(std::span<const RankedHit> hits, std::size_t num_gt) {
    if (num_gt == 0) return std::nullopt;
    const auto order = score_order(hits.size(), [&](std::size_t i) { return hits[i].score; });
    const std::size_t n = order.size();
    std::vector<double> precision(n);
    std::size_t tp = 0;
    for (std::size_t k = 0; k < n; ++k) {
        if (hits[order[k]].true_positive) ++tp;
        precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    }
    for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k)
        if (hits[order[k]].true_positive) sum += precision[k];
    return sum / static_cast<double>(num_gt);
}

nlohmann::json APReport::to_json() const {
    nlohmann::json cls = nlohmann::json::array();
    for (const auto& [key, r] : classes) {
        cls.push_back({{"action", key.action},
                       {"object_category", key.object_category},
                       {"ap", r.ap},
                       {"true_positives", r.true_positives},
                       {"false_positives", r.false_positives},
                       {"ground_truths", r.ground_truths}});
    }
    return {{"mean_ap", mean_ap},
            {"num_classes", classes.size()},
            {"true_positives", true_positives},
            {"false_positives", false_positives},
            {"ground_truths", ground_truths},
            {"classes", cls}};
}

APReport evaluate(std::span<const ImagePredictions> predictions, const GroundTruthSet& ground_truth,
                  double iou_threshold) {
    const std::size_t c = ground_truth.num_actions;
    std::map<std::string, const ImageGroundTruth*> gt_by_id;
    for (const auto& img : ground_truth.images) {
        if (!gt_by_id.emplace(img.image_id, &img).second) {
            fail(ErrorKind::Validation, kModule, "duplicate ground-truth image '" + img.image_id + "'");
        }
        for (const auto& t : img.triplets)
            if (t.action < 0 || static_cast<std::size_t>(t.action) >= c) {
                fail(ErrorKind::Validation, kModule, "ground-truth action id out of range in '" + img.image_id + "'");
            }
    }
    std::map<std::string, const ImagePredictions*> pred_by_id;
    for (const auto& img : predictions) {
        if (!gt_by_id.count(img.image_id)) {
            fail(ErrorKind::Validation, kModule, "prediction image '" + img.image_id + "' has no ground truth entry");
        }
        if (!pred_by_id.emplace(img.image_id, &img).second) {
            fail(ErrorKind::Validation, kModule, "duplicate prediction image '" + img.image_id + "'");
        }
        for (const auto& row : img.rows)
            if (row.action_scores.size() != c) {
                fail(ErrorKind::Validation, kModule,
                     "image '" + img.image_id + "': prediction has " + std::to_string(row.action_scores.size()) +
                         " action scores, ground truth declares " + std::to_string(c) + " actions");
            }
    }

    std::map<ClassKey, std::vector<RankedHit>> hits;
    std::map<ClassKey, std::size_t> gt_counts;

    for (const auto& [id, gt_img] : gt_by_id) {
        for (const auto& t : gt_img->triplets) ++gt_counts[{t.action, t.object_category}];

        std::vector<PredictionRow> rows;
        if (const auto it = pred_by_id.find(id); it != pred_by_id.end()) rows = it->second->rows;
        std::stable_sort(rows.begin(), rows.end(), row_less);

        std::map<ClassKey, std::vector<ClassPrediction>> per_class;
        for (const auto& row : rows) {
            for (std::size_t a = 0; a < c; ++a) {
                per_class[{static_cast<int>(a), row.object_category}].push_back(
                    {row.human_box, row.object_box, row.object_category, static_cast<int>(a), row.action_scores[a]});
            }
        }
        for (const auto& [key, preds] : per_class) {
            std::vector<GroundTruthTriplet> gts;
            for (const auto& t : gt_img->triplets)
                if (t.action == key.action && t.object_category == key.object_category) gts.push_back(t);
            const auto tp = match_image(preds, gts, iou_threshold);
            auto& out = hits[key];
            for (std::size_t i = 0; i < preds.size(); ++i) out.push_back({preds[i].score, tp[i]});
        }
    }

    APReport report;
    double ap_sum = 0.0;
    for (const auto& [key, n_gt] : gt_counts) {
        ClassReport r;
        r.ground_truths = n_gt;
        const auto it = hits.find(key);
        const std::span<const RankedHit> class_hits =
            it == hits.end() ? std::span<const RankedHit>() : std::span<const RankedHit>(it->second);
        for (const auto& h : class_hits) (h.true_positive ? r.true_positives : r.false_positives)++;
        r.ap = *average_precision(class_hits, n_gt);
        ap_sum += r.ap;
        report.true_positives += r.true_positives;
        report.false_positives += r.false_positives;
        report.ground_truths += n_gt;
        report.classes.emplace(key, r);
    }
    report.mean_ap = report.classes.empty() ? 0.0 : ap_sum / static_cast<double>(report.classes.size());
    return report;
}

GroundTruthSet load_ground_truth(const std::filesystem::path& path) {
    const auto j = read_json_file(path, kModule);
    GroundTruthSet gt;
    gt.num_actions = static_cast<std::size_t>(parse_nonnegative_int(j, "num_actions", "ground_truth"));
    const auto& images = require_field(j, "images", kModule, "ground_truth");
    if (!images.is_array()) fail(ErrorKind::Validation, kModule, "ground_truth.images must be an array");
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string ctx = "images[" + std::to_string(i) + "]";
        ImageGroundTruth img;
        img.image_id = require_field(images[i], "image_id", kModule, ctx).get<std::string>();
        const auto& anns = require_field(images[i], "annotations", kModule, ctx);
        for (std::size_t a = 0; a < anns.size(); ++a) {
            const std::string actx = ctx + ".annotations[" + std::to_string(a) + "]";
            const Box hb = parse_box(require_field(anns[a], "human_box", kModule, actx), actx + ".human_box");
            const Box ob = parse_box(require_field(anns[a], "object_box", kModule, actx), actx + ".object_box");
            const int cat = parse_nonnegative_int(anns[a], "object_category", actx);
            const auto& acts = require_field(anns[a], "actions", kModule, actx);
            if (!acts.is_array()) fail(ErrorKind::Validation, kModule, actx + ".actions must be an array");
            for (const auto& act : acts) {
                if (!act.is_number_integer()) fail(ErrorKind::Validation, kModule, actx + ".actions must hold ids");
                img.triplets.push_back({hb, ob, cat, act.get<int>()});
            }
        }
        gt.images.push_back(std::move(img));
    }
    return gt;
}

void write_ground_truth(const std::filesystem::path& path, const GroundTruthSet& gt) {
    nlohmann::json images = nlohmann::json::array();
    for (const auto& img : gt.images) {
        // Triplets sharing boxes and category collapse into one annotation.
        nlohmann::json anns = nlohmann::json::array();
        std::vector<bool> used(img.triplets.size(), false);
        for (std::size_t i = 0; i < img.triplets.size(); ++i) {
            if (used[i]) continue;
            const auto& t = img.triplets[i];
            std::vector<int> actions;
            for (std::size_t k = i; k < img.triplets.size(); ++k) {
                const auto& u = img.triplets[k];
                if (!used[k] && u.human_box == t.human_box && u.object_box == t.object_box &&
                    u.object_category == t.object_category) {
                    used[k] = true;
                    actions.push_back(u.action);
                }
            }
            anns.push_back({{"human_box", box_json(t.human_box)},
                            {"object_box", box_json(t.object_box)},
                            {"object_category", t.object_category},
                            {"actions", actions}});
        }
        images.push_back({{"image_id", img.image_id}, {"annotations", anns}});
    }
    write_json_file(path, {{"num_actions", gt.num_actions}, {"images", images}}, kModule);
}

std::vector<ImagePredictions> load_predictions(const std::filesystem::path& path) {
    const auto j = read_json_file(path, kModule);
    const auto& images = require_field(j, "images", kModule, "predictions");
    if (!images.is_array()) fail(ErrorKind::Validation, kModule, "predictions.images must be an array");
    const bool gt_style = j.contains("num_actions") && !images.empty() && images[0].contains("annotations");
    std::vector<ImagePredictions> out;
    if (gt_style) {
        const GroundTruthSet gt = load_ground_truth(path);
        for (const auto& img : gt.images) {
            ImagePredictions p{img.image_id, {}};
            for (const auto& t : img.triplets) {
                auto it = std::find_if(p.rows.begin(), p.rows.end(), [&](const PredictionRow& r) {
                    return r.human_box == t.human_box && r.object_box == t.object_box &&
                           r.object_category == t.object_category;
                });
                if (it == p.rows.end()) {
                    p.rows.push_back({t.human_box, t.object_box, t.object_category,
                                      std::vector<float>(gt.num_actions, 0.0f)});
                    it = std::prev(p.rows.end());
                }
                it->action_scores.at(static_cast<std::size_t>(t.action)) = 1.0f;
            }
            out.push_back(std::move(p));
        }
        return out;
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string ctx = "images[" + std::to_string(i) + "]";
        ImagePredictions img;
        img.image_id = require_field(images[i], "image_id", kModule, ctx).get<std::string>();
        const auto& preds = require_field(images[i], "predictions", kModule, ctx);
        for (std::size_t p = 0; p < preds.size(); ++p) {
            const std::string pctx = ctx + ".predictions[" + std::to_string(p) + "]";
            PredictionRow row;
            row.human_box = parse_box(require_field(preds[p], "human_box", kModule, pctx), pctx + ".human_box");
            row.object_box = parse_box(require_field(preds[p], "object_box", kModule, pctx), pctx + ".object_box");
            row.object_category = parse_nonnegative_int(preds[p], "object_category", pctx);
            const auto& scores = require_field(preds[p], "action_scores", kModule, pctx);
            for (const auto& s : scores) {
                if (!s.is_number()) fail(ErrorKind::Validation, kModule, pctx + ".action_scores must be numbers");
                const float v = s.get<float>();
                if (!(v >= 0.0f && v <= 1.0f)) fail(ErrorKind::Validation, kModule, pctx + ".action_scores must be in [0,1]");
                row.action_scores.push_back(v);
            }
            img.rows.push_back(std::move(row));
        }
        out.push_back(std::move(img));
    }
    return out;
}

}  // namespace relhoi
