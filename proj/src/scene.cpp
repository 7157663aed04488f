#include "relhoi/scene.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "relhoi/container.hpp"
#include "relhoi/error.hpp"
#include "relhoi/json_io.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "scene-model";

Box parse_box(const nlohmann::json& j, const std::string& context) {
    if (!j.is_array() || j.size() != 4) fail(ErrorKind::Validation, kModule, context + " must be [x1,y1,x2,y2]");
    for (const auto& v : j)
        if (!v.is_number()) fail(ErrorKind::Validation, kModule, context + " entries must be numbers");
    return Box{j[0].get<float>(), j[1].get<float>(), j[2].get<float>(), j[3].get<float>()};
}

int parse_category(const nlohmann::json& j, const CategoryTable& categories, const std::string& context) {
    if (j.is_number_integer()) return j.get<int>();
    if (j.is_string()) {
        const auto id = categories.find_object(j.get<std::string>());
        if (!id) fail(ErrorKind::Validation, kModule, context + ": unknown category '" + j.get<std::string>() + "'");
        return *id;
    }
    fail(ErrorKind::Validation, kModule, context + " must be a category id or name");
}

Tensor flatten_grid(const Tensor& grid) {
    const auto& d = grid.dims();
    return grid.reshaped({d[0] * d[1], d[2]});
}

}  // namespace

Tensor SceneContext::flat_spatial() const { return flatten_grid(spatial); }
Tensor SceneContext::flat_positions() const { return flatten_grid(positions); }

std::vector<Box> Scene::boxes() const {
    std::vector<Box> out;
    out.reserve(detections.size());
    for (const auto& d : detections) out.push_back(d.box);
    return out;
}

KnowledgeBank::KnowledgeBank(std::set<std::pair<int, int>> pairs, const CategoryTable& categories)
    : pairs_(std::move(pairs)) {
    for (const auto& [object, tool] : pairs_) {
        if (!categories.valid_object(object) || !categories.valid_object(tool)) {
            fail(ErrorKind::Validation, kModule,
                 "bank: category out of range in (" + std::to_string(object) + "," + std::to_string(tool) + ")");
        }
        if (object == tool) {
            fail(ErrorKind::Validation, kModule,
                 "bank: object and tool must differ, got (" + categories.object(object).name + "," +
                     categories.object(tool).name + ")");
        }
    }
}

void validate_scene(const Scene& scene, const CategoryTable& categories, std::optional<std::size_t> feature_dim) {
    if (!(scene.size.width > 0) || !(scene.size.height > 0) || !std::isfinite(scene.size.width) ||
        !std::isfinite(scene.size.height)) {
        fail(ErrorKind::Validation, kModule, "scene '" + scene.image_id + "': width/height must be positive");
    }
    std::optional<std::size_t> width = feature_dim;
    for (std::size_t i = 0; i < scene.detections.size(); ++i) {
        const auto& d = scene.detections[i];
        const std::string ctx = "detections[" + std::to_string(i) + "]";
        try {
            validate_box(d.box, kModule);
        } catch (const Error& e) {
            fail(ErrorKind::Validation, kModule, ctx + ".box: " + e.detail());
        }
        if (!(d.score >= 0.0f && d.score <= 1.0f)) fail(ErrorKind::Validation, kModule, ctx + ".score must be in [0,1]");
        if (!categories.valid_object(d.category)) {
            fail(ErrorKind::Validation, kModule, ctx + ".category " + std::to_string(d.category) + " is not in the table");
        }
        if (!width) width = d.feature.size();
        if (d.feature.size() != *width || d.feature.empty()) {
            fail(ErrorKind::Validation, kModule,
                 ctx + ".feature has length " + std::to_string(d.feature.size()) + ", expected " +
                     std::to_string(*width));
        }
        for (float v : d.feature)
            if (!std::isfinite(v)) fail(ErrorKind::Validation, kModule, ctx + ".feature has a non-finite value");
    }
    const auto& sd = scene.context.spatial.dims();
    if (sd.size() != 3 || sd[0] == 0 || sd[1] == 0 || sd[2] == 0) {
        fail(ErrorKind::Validation, kModule, "context.spatial must be a non-empty [H' x W' x D] grid");
    }
    if (scene.context.positions.dims() != sd) {
        fail(ErrorKind::Validation, kModule,
             "context.positions dims " + dims_to_string(scene.context.positions.dims()) + " differ from spatial " +
                 dims_to_string(sd));
    }
}

Scene load_scene(const std::filesystem::path& path, const CategoryTable& categories,
                 std::optional<std::size_t> feature_dim) {
    const auto j = read_json_file(path, kModule);
    Scene scene;
    const auto& id = require_field(j, "image_id", kModule, "scene");
    if (!id.is_string()) fail(ErrorKind::Validation, kModule, "scene.image_id must be a string");
    scene.image_id = id.get<std::string>();
    scene.size.width = static_cast<float>(require_number(j, "width", kModule, "scene"));
    scene.size.height = static_cast<float>(require_number(j, "height", kModule, "scene"));

    const auto& dets = require_field(j, "detections", kModule, "scene");
    if (!dets.is_array()) fail(ErrorKind::Validation, kModule, "scene.detections must be an array");
    for (std::size_t i = 0; i < dets.size(); ++i) {
        const std::string ctx = "detections[" + std::to_string(i) + "]";
        const auto& dj = dets[i];
        Detection d;
        d.box = parse_box(require_field(dj, "box", kModule, ctx), ctx + ".box");
        d.score = static_cast<float>(require_number(dj, "score", kModule, ctx));
        d.category = parse_category(require_field(dj, "category", kModule, ctx), categories, ctx + ".category");
        const auto& feat = require_field(dj, "feature", kModule, ctx);
        if (!feat.is_array()) fail(ErrorKind::Validation, kModule, ctx + ".feature must be an array");
        for (const auto& v : feat) {
            if (!v.is_number()) fail(ErrorKind::Validation, kModule, ctx + ".feature entries must be numbers");
            d.feature.push_back(v.get<float>());
        }
        scene.detections.push_back(std::move(d));
    }

    const auto& ctx = require_field(j, "context", kModule, "scene");
    const auto& container = require_field(ctx, "container", kModule, "scene.context");
    const auto& spatial_name = require_field(ctx, "spatial", kModule, "scene.context");
    const auto& position_name = require_field(ctx, "positions", kModule, "scene.context");
    if (!container.is_string() || !spatial_name.is_string() || !position_name.is_string()) {
        fail(ErrorKind::Validation, kModule, "scene.context fields must be strings");
    }
    std::filesystem::path cpath = container.get<std::string>();
    if (cpath.is_relative()) cpath = path.parent_path() / cpath;
    const auto tensors = read_tensor_container(cpath);
    const Tensor* spatial = find_tensor(tensors, spatial_name.get<std::string>());
    const Tensor* positions = find_tensor(tensors, position_name.get<std::string>());
    if (!spatial) fail(ErrorKind::Validation, kModule, "context tensor '" + spatial_name.get<std::string>() + "' missing");
    if (!positions) {
        fail(ErrorKind::Validation, kModule, "context tensor '" + position_name.get<std::string>() + "' missing");
    }
    scene.context = SceneContext{*spatial, *positions};
    validate_scene(scene, categories, feature_dim);
    return scene;
}

void write_scene(const std::filesystem::path& json_path, const Scene& scene) {
    std::filesystem::path container_path = json_path;
    container_path.replace_extension(".crln");
    write_tensor_container(container_path,
                           {{"spatial", scene.context.spatial}, {"positions", scene.context.positions}});

    nlohmann::json dets = nlohmann::json::array();
    for (const auto& d : scene.detections) {
        dets.push_back({{"box", {d.box.x1, d.box.y1, d.box.x2, d.box.y2}},
                        {"score", d.score},
                        {"category", d.category},
                        {"feature", d.feature}});
    }
    const nlohmann::json j = {
        {"image_id", scene.image_id},
        {"width", scene.size.width},
        {"height", scene.size.height},
        {"detections", dets},
        {"context",
         {{"container", container_path.filename().string()}, {"spatial", "spatial"}, {"positions", "positions"}}},
    };
    write_json_file(json_path, j, kModule);
}

KnowledgeBank load_bank(const std::filesystem::path& path, const CategoryTable& categories) {
    const auto j = read_json_file(path, kModule);
    if (!j.is_array()) fail(ErrorKind::Validation, kModule, "bank file must be a list of {object, tool}");
    std::set<std::pair<int, int>> pairs;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const std::string ctx = "bank[" + std::to_string(i) + "]";
        const int object = parse_category(require_field(j[i], "object", kModule, ctx), categories, ctx + ".object");
        const int tool = parse_category(require_field(j[i], "tool", kModule, ctx), categories, ctx + ".tool");
        pairs.emplace(object, tool);
    }
    return KnowledgeBank(std::move(pairs), categories);
}

void write_bank(const std::filesystem::path& path, const KnowledgeBank& bank, const CategoryTable& categories) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& [object, tool] : bank.pairs()) {
        j.push_back({{"object", categories.object(object).name}, {"tool", categories.object(tool).name}});
    }
    write_json_file(path, j, kModule);
}

}  // namespace relhoi
