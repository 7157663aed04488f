#include "relhoi/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "relhoi/error.hpp"
#include "relhoi/json_io.hpp"
#include "relhoi/tokens.hpp"
#include "relhoi/weights.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "scene-model/fixtures";

std::uint64_t fnv64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Snaps to a dyadic grid so values print compactly and survive text round-trips.
float quantize(double v, double step) { return static_cast<float>(std::round(v / step) * step); }

std::vector<float> uniform_values(RandomStream& rng, std::size_t n, double lo, double hi) {
    std::vector<float> out(n);
    for (auto& v : out) v = static_cast<float>(rng.uniform(lo, hi));
    return out;
}

std::vector<float> embedding_row(std::uint64_t seed, const std::string& key, std::size_t width) {
    RandomStream rng(seed, key);
    return uniform_values(rng, width, -1.0, 1.0);
}

Tensor embedding_table(std::uint64_t seed, const std::vector<std::string>& keys, std::size_t width) {
    std::vector<float> data;
    data.reserve(keys.size() * width);
    for (const auto& k : keys) {
        const auto row = embedding_row(seed, k, width);
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({keys.size(), width}, std::move(data));
}

// Curated (object, tool) affordances; entries whose categories are outside
// the table are dropped.
const std::vector<std::pair<const char*, const char*>>& curated_affordances() {
    static const std::vector<std::pair<const char*, const char*>> pairs = {
        {"cup", "bottle"},          {"wine glass", "bottle"},         {"bowl", "spoon"},  {"cup", "spoon"},
        {"cake", "knife"},          {"pizza", "knife"},               {"apple", "knife"}, {"orange", "knife"},
        {"sandwich", "knife"},      {"sports ball", "baseball bat"},  {"cake", "fork"},   {"pizza", "fork"},
        {"sports ball", "tennis racket"},
    };
    return pairs;
}

std::string numbered(const char* pattern, std::size_t index) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, index);
    return buf;
}

std::size_t get_size(const nlohmann::json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
        fail(ErrorKind::Validation, kModule, std::string("fixture spec '") + key + "' must be a nonnegative integer");
    }
    return v.get<std::size_t>();
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

RandomStream::RandomStream(std::uint64_t seed, std::string_view stream) : key_(mix64(seed ^ mix64(fnv64(stream)))) {}

std::uint64_t RandomStream::next_u64() { return mix64(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

double RandomStream::uniform() { return static_cast<double>(next_u64() >> 40) * 0x1.0p-24; }

std::size_t RandomStream::between(std::size_t lo, std::size_t hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<std::size_t>(next_u64() % (hi - lo + 1));
}

void FixtureSpec::validate() const {
    if (min_detections > max_detections) fail(ErrorKind::Validation, kModule, "min_detections > max_detections");
    if (min_humans > max_humans) fail(ErrorKind::Validation, kModule, "min_humans > max_humans");
    if (min_humans > min_detections) fail(ErrorKind::Validation, kModule, "min_humans > min_detections");
    if (grid_height == 0 || grid_width == 0) fail(ErrorKind::Validation, kModule, "grid must be non-empty");
    if (!(image_width > 0 && image_height > 0)) fail(ErrorKind::Validation, kModule, "image size must be positive");
    if (num_objects < 2 || num_objects > coco_objects_bank_first().size()) {
        fail(ErrorKind::Validation, kModule,
             "num_objects must be in [2, " + std::to_string(coco_objects_bank_first().size()) + "]");
    }
    if (num_actions < 1 || num_actions > default_action_names().size()) {
        fail(ErrorKind::Validation, kModule,
             "num_actions must be in [1, " + std::to_string(default_action_names().size()) + "]");
    }
    try {
        fixture_config(*this).validate();
    } catch (const Error& e) {
        fail(ErrorKind::Validation, kModule, "fixture spec yields an invalid engine config: " + e.detail());
    }
}

nlohmann::json FixtureSpec::to_json() const {
    return {{"scenes", scenes},
            {"min_detections", min_detections},
            {"max_detections", max_detections},
            {"min_humans", min_humans},
            {"max_humans", max_humans},
            {"grid_height", grid_height},
            {"grid_width", grid_width},
            {"image_width", image_width},
            {"image_height", image_height},
            {"dims", {{"unary", dims.unary}, {"model", dims.model}, {"context", dims.context}, {"text", dims.text}}},
            {"heads", heads},
            {"num_objects", num_objects},
            {"num_actions", num_actions},
            {"act_length", act_length},
            {"ground_truth_per_scene", ground_truth_per_scene}};
}

FixtureSpec FixtureSpec::from_json(const nlohmann::json& j) {
    if (!j.is_object()) fail(ErrorKind::Validation, kModule, "fixture spec must be an object");
    static const std::set<std::string> known = {
        "scenes",     "min_detections", "max_detections", "min_humans",  "max_humans",  "grid_height",
        "grid_width", "image_width",    "image_height",   "dims",        "heads",       "num_objects",
        "num_actions", "act_length",    "ground_truth_per_scene"};
    for (const auto& [key, value] : j.items())
        if (!known.count(key)) fail(ErrorKind::Validation, kModule, "unknown fixture spec field '" + key + "'");

    FixtureSpec s;
    s.scenes = get_size(j, "scenes", s.scenes);
    s.min_detections = get_size(j, "min_detections", s.min_detections);
    s.max_detections = get_size(j, "max_detections", s.max_detections);
    s.min_humans = get_size(j, "min_humans", s.min_humans);
    s.max_humans = get_size(j, "max_humans", s.max_humans);
    s.grid_height = get_size(j, "grid_height", s.grid_height);
    s.grid_width = get_size(j, "grid_width", s.grid_width);
    if (j.contains("image_width")) s.image_width = static_cast<float>(require_number(j, "image_width", kModule, "spec"));
    if (j.contains("image_height")) {
        s.image_height = static_cast<float>(require_number(j, "image_height", kModule, "spec"));
    }
    if (j.contains("dims")) {
        const auto& d = j.at("dims");
        s.dims.unary = get_size(d, "unary", s.dims.unary);
        s.dims.model = get_size(d, "model", s.dims.model);
        s.dims.context = get_size(d, "context", s.dims.context);
        s.dims.text = get_size(d, "text", s.dims.text);
    }
    s.heads = get_size(j, "heads", s.heads);
    s.num_objects = get_size(j, "num_objects", s.num_objects);
    s.num_actions = get_size(j, "num_actions", s.num_actions);
    s.act_length = get_size(j, "act_length", s.act_length);
    s.ground_truth_per_scene = get_size(j, "ground_truth_per_scene", s.ground_truth_per_scene);
    s.validate();
    return s;
}

FixtureSpec load_fixture_spec(const std::filesystem::path& path) {
    return FixtureSpec::from_json(read_json_file(path, kModule));
}

CategoryTable fixture_categories(const FixtureSpec& spec) {
    const auto& all = coco_objects_bank_first();
    const auto& actions = default_action_names();
    std::vector<ObjectCategory> objects(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(spec.num_objects));
    std::vector<std::string> acts(actions.begin(), actions.begin() + static_cast<std::ptrdiff_t>(spec.num_actions));
    return CategoryTable(std::move(objects), std::move(acts), "person");
}

EngineConfig fixture_config(const FixtureSpec& spec) {
    EngineConfig c;
    c.dims = spec.dims;
    c.heads = spec.heads;
    c.prompt.act_length = spec.act_length;
    return c;
}

KnowledgeBank fixture_bank(const CategoryTable& categories) {
    std::set<std::pair<int, int>> pairs;
    for (const auto& [object, tool] : curated_affordances()) {
        const auto o = categories.find_object(object);
        const auto t = categories.find_object(tool);
        if (o && t) pairs.emplace(*o, *t);
    }
    return KnowledgeBank(std::move(pairs), categories);
}

NamedTensors fixture_weights(std::uint64_t seed, const EngineConfig& config, const CategoryTable& categories) {
    NamedTensors out;
    const std::size_t E = config.dims.text;
    for (const auto& spec : weight_schema(config, categories.num_objects(), categories.num_actions())) {
        const std::size_t n = std::accumulate(spec.dims.begin(), spec.dims.end(), std::size_t{1}, std::multiplies<>());
        switch (spec.init) {
            case WeightInit::ScaledUniform: {
                RandomStream rng(seed, "weight:" + spec.name);
                const double bound = 1.0 / std::sqrt(static_cast<double>(spec.fan_in));
                out.emplace_back(spec.name, Tensor(spec.dims, uniform_values(rng, n, -bound, bound)));
                break;
            }
            case WeightInit::Ones:
                out.emplace_back(spec.name, Tensor::filled(spec.dims, 1.0f));
                break;
            case WeightInit::Zeros:
                out.emplace_back(spec.name, Tensor::zeros(spec.dims));
                break;
            case WeightInit::LayoutTag:
                out.emplace_back(spec.name, Tensor::filled(spec.dims, static_cast<float>(kWeightsLayoutVersion)));
                break;
            case WeightInit::Embedding: {
                std::vector<std::string> keys;
                if (spec.name == "prompt.prefix") {
                    if (config.prompt.prefix_mode == PrefixMode::Manual) {
                        for (const auto& w : config.prompt.prefix_words) keys.push_back("word:" + w);
                    } else {
                        for (std::size_t k = 0; k < config.prompt.learned_prefix_length; ++k) {
                            keys.push_back("prefix:" + std::to_string(k));
                        }
                    }
                } else if (spec.name == "prompt.act") {
                    for (std::size_t k = 0; k < config.prompt.act_length; ++k) keys.push_back("act:" + std::to_string(k));
                } else if (spec.name == "prompt.person") {
                    out.emplace_back(spec.name, Tensor(spec.dims, embedding_row(seed, "word:person", E)));
                    break;
                } else if (spec.name == "text.objects") {
                    for (std::size_t c = 0; c < categories.num_objects(); ++c) {
                        keys.push_back("text:" + categories.photo_prompt(static_cast<int>(c)));
                    }
                } else {
                    fail(ErrorKind::Internal, kModule, "no embedding rule for '" + spec.name + "'");
                }
                out.emplace_back(spec.name, embedding_table(seed, keys, E));
                break;
            }
        }
    }
    return out;
}

Tensor sinusoidal_grid(std::size_t height, std::size_t width, std::size_t channels) {
    const std::size_t row_channels = channels / 2;
    std::vector<float> data(height * width * channels);
    auto encode = [](double pos, std::size_t k, std::size_t len) {
        const double freq = std::pow(10000.0, -static_cast<double>(2 * (k / 2)) / static_cast<double>(len));
        return static_cast<float>(k % 2 == 0 ? std::sin(pos * freq) : std::cos(pos * freq));
    };
    for (std::size_t y = 0; y < height; ++y) {
        for (std::size_t x = 0; x < width; ++x) {
            float* cell = &data[(y * width + x) * channels];
            for (std::size_t k = 0; k < row_channels; ++k) cell[k] = encode(static_cast<double>(y), k, row_channels);
            for (std::size_t k = row_channels; k < channels; ++k) {
                cell[k] = encode(static_cast<double>(x), k - row_channels, channels - row_channels);
            }
        }
    }
    return Tensor({height, width, channels}, std::move(data));
}

Scene fixture_scene(std::uint64_t seed, const FixtureSpec& spec, const CategoryTable& categories,
                    const KnowledgeBank& bank, std::size_t index) {
    RandomStream rng(seed, numbered("scene:%zu", index));
    Scene scene;
    scene.image_id = numbered("scene_%04zu", index);
    scene.size = {spec.image_width, spec.image_height};

    const std::size_t n = rng.between(spec.min_detections, spec.max_detections);
    const std::size_t humans = rng.between(spec.min_humans, std::min(spec.max_humans, n));

    std::vector<int> bank_categories;
    for (const auto& [object, tool] : bank.pairs()) {
        bank_categories.push_back(object);
        bank_categories.push_back(tool);
    }
    std::sort(bank_categories.begin(), bank_categories.end());
    bank_categories.erase(std::unique(bank_categories.begin(), bank_categories.end()), bank_categories.end());
    std::vector<int> others;
    for (std::size_t c = 0; c < categories.num_objects(); ++c)
        if (!categories.is_human(static_cast<int>(c))) others.push_back(static_cast<int>(c));

    std::vector<int> cats(n, categories.human_id());
    for (std::size_t k = humans; k < n; ++k) {
        const bool from_bank = !bank_categories.empty() && rng.uniform() < 0.6;
        const auto& pool = from_bank ? bank_categories : others;
        cats[k] = pool[rng.between(0, pool.size() - 1)];
    }
    for (std::size_t k = n; k > 1; --k) std::swap(cats[k - 1], cats[rng.between(0, k - 1)]);

    const double W = spec.image_width, H = spec.image_height;
    for (std::size_t k = 0; k < n; ++k) {
        Detection d;
        const float x1 = quantize(rng.uniform(0.0, 0.75 * W), 0.25);
        const float y1 = quantize(rng.uniform(0.0, 0.75 * H), 0.25);
        const float w = quantize(rng.uniform(0.08 * W, 0.4 * W), 0.25);
        const float h = quantize(rng.uniform(0.08 * H, 0.4 * H), 0.25);
        d.box = {x1, y1, std::min(static_cast<float>(W), x1 + w), std::min(static_cast<float>(H), y1 + h)};
        d.score = quantize(rng.uniform(0.3, 1.0), 1.0 / 256.0);
        d.category = cats[k];
        d.feature.resize(spec.dims.unary);
        for (auto& v : d.feature) v = quantize(rng.uniform(-1.0, 1.0), 1.0 / 1024.0);
        scene.detections.push_back(std::move(d));
    }

    RandomStream grid_rng(seed, numbered("grid:%zu", index));
    const std::size_t cells = spec.grid_height * spec.grid_width;
    scene.context.spatial = Tensor({spec.grid_height, spec.grid_width, spec.dims.model},
                                   uniform_values(grid_rng, cells * spec.dims.model, -1.0, 1.0));
    scene.context.positions = sinusoidal_grid(spec.grid_height, spec.grid_width, spec.dims.model);
    return scene;
}

ImageGroundTruth fixture_ground_truth(std::uint64_t seed, const FixtureSpec& spec, const CategoryTable& categories,
                                      const Scene& scene, std::size_t index) {
    RandomStream rng(seed, numbered("gt:%zu", index));
    ImageGroundTruth gt{scene.image_id, {}};
    auto pairs = enumerate_pairs(scene.detections, categories);
    for (std::size_t k = pairs.size(); k > 1; --k) std::swap(pairs[k - 1], pairs[rng.between(0, k - 1)]);
    pairs.resize(std::min(pairs.size(), spec.ground_truth_per_scene));
    std::sort(pairs.begin(), pairs.end());
    for (const auto& [i, j] : pairs) {
        const auto& h = scene.detections[i];
        const auto& o = scene.detections[j];
        const int action = static_cast<int>(rng.between(0, spec.num_actions - 1));
        gt.triplets.push_back({h.box, o.box, o.category, action});
    }
    return gt;
}

std::vector<std::string> generate_fixtures(std::uint64_t seed, const FixtureSpec& spec,
                                           const std::filesystem::path& out_dir) {
    spec.validate();
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir / "scenes", ec);
    if (ec) fail(ErrorKind::Io, kModule, "cannot create " + (out_dir / "scenes").string() + ": " + ec.message());

    const CategoryTable categories = fixture_categories(spec);
    const EngineConfig config = fixture_config(spec);
    const KnowledgeBank bank = fixture_bank(categories);

    std::vector<std::string> files;
    write_categories(out_dir / "categories.json", categories);
    files.push_back("categories.json");
    write_engine_config(out_dir / "config.json", config);
    files.push_back("config.json");
    write_bank(out_dir / "bank.json", bank, categories);
    files.push_back("bank.json");
    write_tensor_container(out_dir / "weights.crln", fixture_weights(seed, config, categories));
    files.push_back("weights.crln");

    GroundTruthSet gt;
    gt.num_actions = spec.num_actions;
    for (std::size_t s = 0; s < spec.scenes; ++s) {
        const Scene scene = fixture_scene(seed, spec, categories, bank, s);
        const std::string stem = "scenes/" + scene.image_id;
        write_scene(out_dir / (stem + ".json"), scene);
        files.push_back(stem + ".json");
        files.push_back(stem + ".crln");
        gt.images.push_back(fixture_ground_truth(seed, spec, categories, scene, s));
    }
    write_ground_truth(out_dir / "ground_truth.json", gt);
    files.push_back("ground_truth.json");

    nlohmann::json listing = nlohmann::json::array();
    for (const auto& f : files) {
        listing.push_back({{"path", f}, {"fnv1a", fnv1a_hex(read_file_bytes(out_dir / f))}});
    }
    write_json_file(out_dir / "manifest.json",
                    {{"seed", seed}, {"engine_version", kEngineVersion}, {"spec", spec.to_json()}, {"files", listing}},
                    kModule);
    files.push_back("manifest.json");
    return files;
}

}  // namespace relhoi
