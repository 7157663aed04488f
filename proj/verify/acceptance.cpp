#include "acceptance.hpp"

#include <algorithm>
#include <bit>
#include <cstdio>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>
#include <tuple>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "relhoi/config.hpp"
#include "relhoi/container.hpp"
#include "relhoi/decoder.hpp"
#include "relhoi/error.hpp"
#include "relhoi/evaluation.hpp"
#include "relhoi/fixtures.hpp"
#include "relhoi/fusion.hpp"
#include "relhoi/pipeline.hpp"
#include "relhoi/tokens.hpp"

namespace relhoi::verify {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

Tensor random_matrix(RandomStream& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
    std::vector<float> data(rows * cols);
    for (auto& v : data) v = static_cast<float>(rng.uniform(lo, hi));
    return Tensor({rows, cols}, std::move(data));
}

// Uniform in [-8, 8] on a 1/1024 grid: adding a small integer stays exact.
float quantize_for_shift(RandomStream& rng) {
    return static_cast<float>(std::round(rng.uniform(-8.0, 8.0) * 1024.0) / 1024.0);
}

Tensor random_vector(RandomStream& rng, std::size_t n, double lo, double hi) {
    return random_matrix(rng, 1, n, lo, hi).reshaped({n});
}

Linear random_linear(RandomStream& rng, std::size_t in, std::size_t out) {
    const double b = 1.0 / std::sqrt(static_cast<double>(in));
    return Linear{random_matrix(rng, in, out, -b, b), random_vector(rng, out, -b, b)};
}

AttentionWeights random_attention(RandomStream& rng, std::size_t width) {
    return AttentionWeights{random_linear(rng, width, width), random_linear(rng, width, width),
                            random_linear(rng, width, width), random_linear(rng, width, width),
                            random_vector(rng, width, 0.5, 1.5), random_vector(rng, width, -0.5, 0.5)};
}

Matrix zeros_like(std::size_t rows, std::size_t cols) { return Matrix(rows, std::vector<double>(cols, 0.0)); }

bool same_bits(std::span<const float> a, std::span<const float> b) {
    return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

// Detections with random categories and unit boxes; only indices and
// categories matter for enumeration.
std::vector<Detection> random_detections(RandomStream& rng, std::size_t n, const CategoryTable& categories,
                                         const std::vector<int>& pool) {
    std::vector<Detection> dets(n);
    for (std::size_t i = 0; i < n; ++i) {
        dets[i].box = {0, 0, 1, 1};
        dets[i].score = 1;
        dets[i].feature = {0};
        dets[i].category = rng.uniform() < 0.35 ? categories.human_id() : pool[rng.between(0, pool.size() - 1)];
    }
    return dets;
}

std::filesystem::path fresh_work_dir() {
    static int counter = 0;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("relhoi_selftest_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

using InteractionKey = std::tuple<float, float, float, float, float, float, float, float, int>;

InteractionKey key_of(const ScoredInteraction& s) {
    return {s.human_box.x1,  s.human_box.y1,  s.human_box.x2,  s.human_box.y2, s.object_box.x1,
            s.object_box.y1, s.object_box.x2, s.object_box.y2, s.object_category};
}

// Largest score difference between two interaction lists after sorting by
// key; infinity if the key multisets differ.
double multiset_distance(std::vector<ScoredInteraction> a, std::vector<ScoredInteraction> b) {
    auto less = [](const ScoredInteraction& x, const ScoredInteraction& y) {
        const auto kx = key_of(x), ky = key_of(y);
        if (kx != ky) return kx < ky;
        return x.scores < y.scores;
    };
    if (a.size() != b.size()) return INFINITY;
    std::sort(a.begin(), a.end(), less);
    std::sort(b.begin(), b.end(), less);
    double worst = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (key_of(a[k]) != key_of(b[k]) || a[k].scores.size() != b[k].scores.size()) return INFINITY;
        for (std::size_t s = 0; s < a[k].scores.size(); ++s)
            worst = std::max(worst, std::fabs(double{a[k].scores[s]} - b[k].scores[s]));
    }
    return worst;
}

}  // namespace

CheckResult check_attention_algebra() {
    const auto start = Clock::now();
    CheckResult r{"attention-algebra", true, "", 0};
    constexpr std::size_t kInstances = 1000;
    double worst_sum = 0, worst_shift = 0, worst_mean = 0, worst_var = 0, worst_zero = 0, worst_oracle = 0;
    std::size_t negative = 0;
    for (std::size_t t = 0; t < kInstances; ++t) {
        RandomStream rng(t, "attention-algebra");
        const std::size_t m = rng.between(1, 6), n = rng.between(2, 12);

        // Softmax: values on a 1/1024 grid so that integer shifts are exact.
        std::vector<float> raw(m * n);
        for (auto& v : raw) v = quantize_for_shift(rng);
        const Tensor x({m, n}, raw);
        const Tensor p = ops::softmax_rows(x);
        const float shift = static_cast<float>(static_cast<int>(rng.between(0, 20)) - 10);
        std::vector<float> shifted = raw;
        for (auto& v : shifted) v += shift;
        const Tensor ps = ops::softmax_rows(Tensor({m, n}, shifted));
        for (std::size_t i = 0; i < m; ++i) {
            double sum = 0;
            for (float v : p.row(i)) {
                sum += v;
                if (v < 0) ++negative;
            }
            worst_sum = std::max(worst_sum, std::fabs(sum - 1.0));
        }
        for (std::size_t k = 0; k < p.size(); ++k) worst_shift = std::max(worst_shift, double{std::fabs(p[k] - ps[k])});

        // Layer norm with unit gain, zero bias: mean 0, variance var/(var+eps).
        const double spread = rng.uniform(1.0, 10.0);
        const Tensor y = random_matrix(rng, m, n, -spread, spread);
        const Tensor ln = ops::layer_norm(y, Tensor::filled({n}, 1.0f), Tensor::zeros({n}));
        for (std::size_t i = 0; i < m; ++i) {
            double in_mean = 0, in_var = 0, mean = 0, var = 0;
            for (float v : y.row(i)) in_mean += v / static_cast<double>(n);
            for (float v : y.row(i)) in_var += (v - in_mean) * (v - in_mean) / static_cast<double>(n);
            for (float v : ln.row(i)) mean += v / static_cast<double>(n);
            for (float v : ln.row(i)) var += (v - mean) * (v - mean) / static_cast<double>(n);
            worst_mean = std::max(worst_mean, std::fabs(mean));
            worst_var = std::max(worst_var, std::fabs(var - in_var / (in_var + double{ops::kLayerNormEps})));
        }

        // Attention: zero positions reduce to content-only attention, and the
        // full computation matches the scalar oracle.
        const std::size_t heads = rng.between(1, 3);
        const std::size_t width = heads * rng.between(1, 4) + (heads == 1 ? 1 : 0);
        const std::size_t keys = rng.between(1, 6);
        const AttentionWeights w = random_attention(rng, width);
        const Tensor cq = random_matrix(rng, m, width, -1, 1), ck = random_matrix(rng, keys, width, -1, 1);
        const Tensor pq = random_matrix(rng, m, width, -1, 1), pk = random_matrix(rng, keys, width, -1, 1);
        const Tensor v = random_matrix(rng, keys, width, -1, 1);
        const Tensor zero_q = Tensor::zeros({m, width}), zero_k = Tensor::zeros({keys, width});
        const Tensor with_zero = attention(cq, zero_q, ck, zero_k, v, w, heads);
        const Matrix content_only =
            attention_oracle(to_matrix(cq), zeros_like(m, width), to_matrix(ck), zeros_like(keys, width), to_matrix(v),
                             w, heads);
        worst_zero = std::max(worst_zero, max_abs_diff(with_zero, content_only));
        const Tensor full = attention(cq, pq, ck, pk, v, w, heads);
        worst_oracle = std::max(worst_oracle, max_abs_diff(full, attention_oracle(to_matrix(cq), to_matrix(pq),
                                                                                  to_matrix(ck), to_matrix(pk),
                                                                                  to_matrix(v), w, heads)));
    }
    r.seconds = seconds_since(start);
    r.passed = worst_sum <= 1e-6 && negative == 0 && worst_shift <= 1e-6 && worst_mean <= 1e-4 && worst_var <= 1e-4 &&
               worst_zero <= 1e-5 && worst_oracle <= 1e-5 && r.seconds < kAttentionBudgetSeconds;
    r.detail = std::to_string(kInstances) + " instances; softmax |sum-1| " + fmt(worst_sum) + ", shift " +
               fmt(worst_shift) + ", layer-norm mean " + fmt(worst_mean) + " var " + fmt(worst_var) +
               ", zero-position " + fmt(worst_zero) + ", oracle " + fmt(worst_oracle);
    return r;
}

CheckResult check_enumeration_oracles() {
    const auto start = Clock::now();
    CheckResult r{"enumeration-oracles", true, "", 0};
    FixtureSpec spec;
    const CategoryTable categories = fixture_categories(spec);
    const KnowledgeBank bank = fixture_bank(categories);
    // Bias towards bank categories so that triplets actually occur.
    std::vector<int> pool;
    for (const auto& [o, t] : bank.pairs()) {
        pool.push_back(o);
        pool.push_back(t);
    }
    for (std::size_t c = 0; c < categories.num_objects(); ++c)
        if (!categories.is_human(static_cast<int>(c))) pool.push_back(static_cast<int>(c));

    constexpr std::size_t kSeeds = 500;
    std::size_t pair_total = 0, triplet_total = 0, mismatches = 0;
    for (std::size_t seed = 0; seed < kSeeds; ++seed) {
        RandomStream rng(seed, "enumeration");
        const auto dets = random_detections(rng, rng.between(0, 8), categories, pool);
        const std::size_t h = static_cast<std::size_t>(std::count_if(
            dets.begin(), dets.end(), [&](const Detection& d) { return categories.is_human(d.category); }));
        const auto pairs = enumerate_pairs(dets, categories);
        const auto triplets = enumerate_triplets(dets, categories, bank);
        const std::size_t expected_pairs = dets.empty() ? 0 : h * (dets.size() - 1);
        if (pairs.size() != expected_pairs || pairs != brute_force_pairs(dets, categories) ||
            triplets != brute_force_triplets(dets, categories, bank)) {
            ++mismatches;
        }
        pair_total += pairs.size();
        triplet_total += triplets.size();
    }
    r.seconds = seconds_since(start);
    r.passed = mismatches == 0 && triplet_total > 0;
    r.detail = std::to_string(kSeeds) + " scenes (n<=8), " + std::to_string(pair_total) + " pairs, " +
               std::to_string(triplet_total) + " triplets, " + std::to_string(mismatches) + " mismatches";
    return r;
}

CheckResult check_fusion_oracle() {
    const auto start = Clock::now();
    CheckResult r{"fusion-oracle", true, "", 0};
    constexpr std::size_t kInstances = 500;
    std::size_t mismatches = 0, collapse_failures = 0;
    for (std::size_t seed = 0; seed < kInstances; ++seed) {
        RandomStream rng(seed, "fusion");
        const std::size_t m = rng.between(1, 10), rows = rng.between(0, 30), c = rng.between(1, 8);
        const Tensor binary = random_matrix(rng, m, c, -4, 4);
        const Tensor ternary = random_matrix(rng, rows, c, -4, 4);
        const Tensor semantic = random_matrix(rng, m, c, -4, 4);
        std::vector<std::size_t> assignment(rows);
        for (auto& a : assignment) a = rng.between(0, m - 1);
        std::sort(assignment.begin(), assignment.end());  // triplet order groups by pair, as the enumerator does
        if (rng.uniform() < 0.5) {
            for (std::size_t k = rows; k > 1; --k) std::swap(assignment[k - 1], assignment[rng.between(0, k - 1)]);
        }
        const double alpha = seed % 3 == 0 ? 1.0 : rng.uniform(0.1, 2.0);

        const Tensor fused = fuse_ternary(binary, ternary, assignment, alpha);
        if (!same_bits(fused.values(), fuse_oracle(binary, ternary, assignment, alpha))) ++mismatches;

        const Tensor collapsed = fuse_semantic(fuse_ternary(binary, ternary, assignment, 0.0), semantic, 0.0);
        if (!collapsed.bitwise_equal(binary)) ++collapse_failures;
    }
    r.seconds = seconds_since(start);
    r.passed = mismatches == 0 && collapse_failures == 0;
    r.detail = std::to_string(kInstances) + " instances (m<=10, r<=30); " + std::to_string(mismatches) +
               " oracle mismatches, " + std::to_string(collapse_failures) + " alpha=beta=0 collapse failures";
    return r;
}

CheckResult check_gradient() {
    const auto start = Clock::now();
    CheckResult r{"gradient-check", true, "", 0};
    constexpr std::size_t kSeeds = 100;
    constexpr std::size_t kRows = 4, kCols = 6;
    constexpr double kStep = 1e-3;
    const FocalConfig focal;
    const double beta = FusionConfig{}.beta;
    double worst = 0, worst_loss = 0;
    for (std::size_t seed = 0; seed < kSeeds; ++seed) {
        RandomStream rng(seed, "gradient");
        const Tensor refined = random_matrix(rng, kRows, kCols, -3, 3);
        const Tensor semantic = random_matrix(rng, kRows, kCols, -3, 3);
        std::vector<std::uint8_t> y(kRows * kCols);
        for (auto& v : y) v = rng.uniform() < 0.3 ? 1 : 0;
        const LabelMatrix labels(kRows, kCols, y);

        const FocalLoss analytic =
            focal_loss(fuse_semantic(refined, semantic, beta), labels, focal.gamma, focal.alpha);

        const double norm = static_cast<double>(std::max<std::size_t>(1, labels.positives()));
        // Loss as a function of the refined logits, evaluated in double.
        auto loss_at = [&](const std::vector<double>& yhat, const std::vector<double>& ydot) {
            double total = 0;
            for (std::size_t k = 0; k < yhat.size(); ++k)
                total += focal_oracle(yhat[k] + beta * ydot[k], y[k] != 0, focal.gamma, focal.alpha);
            return total / norm;
        };
        const std::vector<double> yhat = to_vector(refined), ydot = to_vector(semantic);
        worst_loss = std::max(worst_loss, std::fabs(loss_at(yhat, ydot) - analytic.loss) / std::max(1e-12, analytic.loss));

        for (std::size_t k = 0; k < yhat.size(); ++k) {
            auto up = yhat, down = yhat;
            up[k] += kStep;
            down[k] -= kStep;
            const double fd = (loss_at(up, ydot) - loss_at(down, ydot)) / (2 * kStep);
            const double a = analytic.grad[k];
            worst = std::max(worst, std::fabs(a - fd) / std::max({std::fabs(a), std::fabs(fd), 1e-12}));

            // Through the semantic stream the derivative is beta times the same gradient.
            auto sup = ydot, sdown = ydot;
            sup[k] += kStep;
            sdown[k] -= kStep;
            const double fd_sem = (loss_at(yhat, sup) - loss_at(yhat, sdown)) / (2 * kStep);
            const double a_sem = beta * a;
            worst = std::max(worst, std::fabs(a_sem - fd_sem) / std::max({std::fabs(a_sem), std::fabs(fd_sem), 1e-12}));
        }
    }
    r.seconds = seconds_since(start);
    r.passed = worst < 1e-4 && worst_loss < 1e-6 && r.seconds < kGradientBudgetSeconds;
    r.detail = std::to_string(kSeeds) + " seeds of 4x6, max relative error " + fmt(worst) + ", loss vs oracle " +
               fmt(worst_loss);
    return r;
}

CheckResult check_scoring_arithmetic() {
    const auto start = Clock::now();
    CheckResult r{"scoring-arithmetic", true, "", 0};
    // 0.72^2.8 * 0.5, independently evaluated.
    constexpr double kSpot = 0.19929711;
    const PairConfidence conf{0.9f, 0.8f};
    const double spot = final_scores(Tensor::matrix(1, 1, {0.0f}), std::span(&conf, 1), 2.8).at(0, 0);
    const double spot_err = std::fabs(spot - kSpot);

    std::size_t violations = 0, comparisons = 0;
    for (std::size_t seed = 0; seed < 200; ++seed) {
        RandomStream rng(seed, "scoring");
        const std::size_t m = rng.between(1, 6), c = rng.between(1, 6);
        const Tensor logits = random_matrix(rng, m, c, -6, 6);
        std::vector<PairConfidence> confs(m);
        for (auto& pc : confs) pc = {static_cast<float>(rng.uniform()), static_cast<float>(rng.uniform())};
        double l1 = rng.uniform(0.5, 5.0), l2 = rng.uniform(0.5, 5.0);
        if (l1 > l2) std::swap(l1, l2);
        const Tensor s1 = final_scores(logits, confs, l1), s2 = final_scores(logits, confs, l2);
        for (std::size_t k = 0; k < s1.size(); ++k) {
            ++comparisons;
            if (!(s2[k] <= s1[k]) || s1[k] < 0 || s1[k] > 1 || s2[k] < 0 || s2[k] > 1) ++violations;
        }
    }
    r.seconds = seconds_since(start);
    r.passed = spot_err <= 1e-6 && violations == 0;
    r.detail = "spot " + std::to_string(spot) + " (|err| " + fmt(spot_err) + "), " + std::to_string(comparisons) +
               " monotonicity comparisons, " + std::to_string(violations) + " violations";
    return r;
}

CheckResult check_ap_oracle() {
    const auto start = Clock::now();
    CheckResult r{"ap-oracle", true, "", 0};
    std::size_t instances = 0, mismatches = 0;
    for (std::size_t n = 0; n <= 6; ++n) {
        for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
            const std::size_t tps = static_cast<std::size_t>(std::popcount(mask));
            for (int scoring = 0; scoring < 3; ++scoring) {
                RandomStream rng(mask * 16 + n * 4 + static_cast<std::size_t>(scoring), "ap");
                std::vector<RankedHit> hits(n);
                for (std::size_t k = 0; k < n; ++k) {
                    hits[k].true_positive = (mask >> k) & 1;
                    // 0: strictly descending, 1: coarse ties, 2: random order.
                    hits[k].score = scoring == 0   ? 1.0 - 0.1 * static_cast<double>(k)
                                    : scoring == 1 ? 0.25 * static_cast<double>(rng.between(1, 3))
                                                   : rng.uniform();
                }
                for (std::size_t gt = std::max<std::size_t>(tps, 1); gt <= tps + 2; ++gt) {
                    ++instances;
                    const auto ap = average_precision(hits, gt);
                    if (!ap || *ap != ap_oracle(hits, gt)) ++mismatches;
                }
            }
        }
    }
    const RankedHit tp_fp[] = {{0.9, true}, {0.1, false}};
    const RankedHit fp_tp[] = {{0.9, false}, {0.1, true}};
    const bool spot_ok = average_precision(tp_fp, 1) == 1.0 && average_precision(fp_tp, 1) == 0.5;

    // Ground truth echoed back as predictions scores mAP 1.
    const FixtureSpec spec;
    const CategoryTable categories = fixture_categories(spec);
    const KnowledgeBank bank = fixture_bank(categories);
    GroundTruthSet gt{spec.num_actions, {}};
    std::vector<ImagePredictions> preds;
    for (std::size_t s = 0; s < 6; ++s) {
        const Scene scene = fixture_scene(42, spec, categories, bank, s);
        gt.images.push_back(fixture_ground_truth(42, spec, categories, scene, s));
        ImagePredictions img{scene.image_id, {}};
        for (const auto& t : gt.images.back().triplets) {
            PredictionRow row{t.human_box, t.object_box, t.object_category, std::vector<float>(spec.num_actions, 0.0f)};
            row.action_scores[static_cast<std::size_t>(t.action)] = 1.0f;
            img.rows.push_back(row);
        }
        preds.push_back(img);
    }
    const APReport perfect = evaluate(preds, gt);

    r.seconds = seconds_since(start);
    r.passed = mismatches == 0 && spot_ok && perfect.mean_ap == 1.0 && !perfect.classes.empty();
    r.detail = std::to_string(instances) + " exhaustive instances (<=6 predictions), " + std::to_string(mismatches) +
               " mismatches; perfect-prediction mAP " + std::to_string(perfect.mean_ap);
    return r;
}

CheckResult check_hyperparameter_defaults() {
    const auto start = Clock::now();
    CheckResult r{"hyperparameter-defaults", true, "", 0};
    const EngineConfig c;
    const EngineConfig round_trip = EngineConfig::from_json(c.to_json());
    std::vector<std::string> wrong;
    for (const EngineConfig* cfg : {&c, &round_trip}) {
        if (cfg->fusion.lambda != 2.8) wrong.push_back("lambda");
        if (cfg->fusion.lambda_train != 1.0) wrong.push_back("lambda_train");
        if (cfg->fusion.alpha != 1.0) wrong.push_back("alpha");
        if (cfg->fusion.beta != 0.4) wrong.push_back("beta");
        if (cfg->prompt.act_length != 4) wrong.push_back("act_length");
        if (cfg->blocks.binary != 2) wrong.push_back("blocks.binary");
        if (cfg->blocks.ternary != 2) wrong.push_back("blocks.ternary");
        if (cfg->blocks.contextual != 2) wrong.push_back("blocks.contextual");
        if (cfg->prompt.prefix_mode != PrefixMode::Manual ||
            cfg->prompt.prefix_words != std::vector<std::string>{"a", "photo", "of", "a"}) {
            wrong.push_back("prefix");
        }
    }
    r.seconds = seconds_since(start);
    r.passed = wrong.empty();
    if (wrong.empty()) {
        r.detail = "lambda 2.8/1.0, alpha 1.0, beta 0.4, [ACT] 4, blocks 2/2/2, manual prefix";
    } else {
        for (const auto& w : wrong) r.detail += w + " ";
    }
    return r;
}

CheckResult check_end_to_end(const SuiteOptions& options, Clock::time_point suite_start) {
    const auto start = Clock::now();
    CheckResult r{"end-to-end-determinism", true, "", 0};
    const bool own_dir = options.work_dir.empty();
    const auto dir = own_dir ? fresh_work_dir() : options.work_dir;
    std::vector<std::string> problems;
    try {
        const FixtureSpec spec;
        generate_fixtures(42, spec, dir);
        const Engine engine = Engine::load(dir / "config.json", dir / "weights.crln");
        const KnowledgeBank bank = load_bank(dir / "bank.json", engine.categories());
        std::vector<std::filesystem::path> scene_files;
        for (std::size_t s = 0; s < spec.scenes; ++s) {
            char name[32];
            std::snprintf(name, sizeof name, "scene_%04zu.json", s);
            scene_files.push_back(dir / "scenes" / name);
        }
        const PredictionMetadata meta{engine.config().fusion, engine.config().focal, engine.weights_digest()};
        auto render = [&](std::size_t threads) {
            const auto preds = infer_scene_files(engine, scene_files, bank, engine.config().fusion, threads);
            return predictions_to_json(meta, preds).dump(2) + "\n";
        };
        const std::string first = render(1), second = render(1), threaded = render(2);
        if (first != second) problems.push_back("two runs differ");
        if (first != threaded) problems.push_back("threaded run differs");
        if (options.golden_predictions) {
            const auto golden = read_file_bytes(*options.golden_predictions);
            if (std::string(golden.begin(), golden.end()) != first) problems.push_back("golden file differs");
        }

        double worst_perm = 0;
        std::size_t collapse_failures = 0, bank_failures = 0, moved = 0, identity_scenes = 0;
        for (const auto& path : scene_files) {
            const Scene scene = load_scene(path, engine.categories());
            const auto base = engine.infer_scene(scene, bank);
            std::size_t scene_moved = 0;
            for (std::size_t p = 0; p < 3; ++p) {
                RandomStream rng(p, "permutation:" + scene.image_id);
                Scene shuffled = scene;
                auto& d = shuffled.detections;
                for (std::size_t k = d.size(); k > 1; --k) std::swap(d[k - 1], d[rng.between(0, k - 1)]);
                for (std::size_t k = 0; k < d.size(); ++k) {
                    if (d[k].box != scene.detections[k].box) {
                        ++scene_moved;
                        break;
                    }
                }
                worst_perm = std::max(worst_perm, multiset_distance(base, engine.infer_scene(shuffled, bank)));
            }
            moved += scene_moved;
            if (scene_moved == 0) ++identity_scenes;
            FusionConfig off = engine.config().fusion;
            off.alpha = 0;
            off.beta = 0;
            const auto collapsed = engine.run(scene, bank, off);
            const auto binary_only = engine.run(scene, bank, off, StreamToggles{false, false});
            if (!collapsed.scores.bitwise_equal(binary_only.scores)) ++collapse_failures;

            FusionConfig no_alpha = engine.config().fusion;
            no_alpha.alpha = 0;
            if (!engine.run(scene, KnowledgeBank{}, engine.config().fusion)
                     .scores.bitwise_equal(engine.run(scene, bank, no_alpha).scores)) {
                ++bank_failures;
            }
        }
        if (identity_scenes) problems.push_back(std::to_string(identity_scenes) + " scene(s) never reordered");
        if (worst_perm > 1e-5) problems.push_back("permutation changed scores by " + fmt(worst_perm));
        if (collapse_failures) problems.push_back("alpha=beta=0 differs from binary-only run");
        if (bank_failures) problems.push_back("empty bank differs from alpha=0");
        r.detail = "seed-42 fixture, " + std::to_string(scene_files.size()) + " scenes; " + std::to_string(moved) + " reordered runs, permutation max |diff| " +
                   fmt(worst_perm);
    } catch (const std::exception& e) {
        problems.push_back(e.what());
    }
    if (own_dir) std::filesystem::remove_all(dir);
    r.seconds = seconds_since(start);
    const double total = seconds_since(suite_start);
    if (total >= kSelftestBudgetSeconds) problems.push_back("suite took " + fmt(total) + " s");
    r.detail += "; suite " + fmt(total) + " s";
    for (const auto& p : problems) r.detail += "; " + p;
    r.passed = problems.empty();
    return r;
}

std::vector<CheckResult> run_acceptance(const SuiteOptions& options) {
    const auto start = Clock::now();
    std::vector<CheckResult> out;
    auto guarded = [&](const char* id, auto&& check) {
        try {
            out.push_back(check());
        } catch (const std::exception& e) {
            out.push_back({id, false, std::string("threw: ") + e.what(), 0});
        }
    };
    guarded("attention-algebra", check_attention_algebra);
    guarded("enumeration-oracles", check_enumeration_oracles);
    guarded("fusion-oracle", check_fusion_oracle);
    guarded("gradient-check", check_gradient);
    guarded("scoring-arithmetic", check_scoring_arithmetic);
    guarded("ap-oracle", check_ap_oracle);
    guarded("hyperparameter-defaults", check_hyperparameter_defaults);
    guarded("end-to-end-determinism", [&] { return check_end_to_end(options, start); });
    return out;
}

std::string format_result(const CheckResult& result) {
    std::ostringstream os;
    os << (result.passed ? "PASS" : "FAIL") << "  " << result.id << "  (" << fmt(result.seconds) << " s)  "
       << result.detail;
    return os.str();
}

}  // namespace relhoi::verify
