#include "relhoi/categories.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "relhoi/error.hpp"
#include "relhoi/json_io.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "scene-model/categories";

}  // namespace

CategoryTable::CategoryTable(std::vector<ObjectCategory> objects, std::vector<std::string> actions,
                             std::string human_name)
    : objects_(std::move(objects)), actions_(std::move(actions)) {
    std::set<std::string> names;
    for (const auto& o : objects_) {
        if (o.name.empty()) fail(ErrorKind::Validation, kModule, "objects: empty category name");
        if (!names.insert(o.name).second) fail(ErrorKind::Validation, kModule, "objects: duplicate name '" + o.name + "'");
        if (o.article != "a" && o.article != "an") {
            fail(ErrorKind::Validation, kModule, "objects: article for '" + o.name + "' must be \"a\" or \"an\"");
        }
    }
    std::set<std::string> action_names;
    for (const auto& a : actions_) {
        if (a.empty()) fail(ErrorKind::Validation, kModule, "actions: empty action name");
        if (!action_names.insert(a).second) fail(ErrorKind::Validation, kModule, "actions: duplicate name '" + a + "'");
    }
    if (actions_.empty()) fail(ErrorKind::Validation, kModule, "actions: table is empty");
    const auto human = find_object(human_name);
    if (!human) fail(ErrorKind::Validation, kModule, "human: '" + human_name + "' is not an object category");
    human_id_ = *human;
}

const ObjectCategory& CategoryTable::object(int category) const {
    if (!valid_object(category)) fail(ErrorKind::Index, kModule, "object category " + std::to_string(category) + " out of range");
    return objects_[static_cast<std::size_t>(category)];
}

std::optional<int> CategoryTable::find_object(const std::string& name) const {
    for (std::size_t i = 0; i < objects_.size(); ++i)
        if (objects_[i].name == name) return static_cast<int>(i);
    return std::nullopt;
}

std::string CategoryTable::photo_prompt(int category) const {
    const auto& o = object(category);
    return "a photo of " + o.article + " " + o.name;
}

std::string CategoryTable::interaction_prompt(int category, const std::vector<std::string>& prefix_words) const {
    std::string out;
    for (const auto& w : prefix_words) out += w + " ";
    return out + "person [ACT] " + object(category).name;
}

nlohmann::json CategoryTable::to_json() const {
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : objects_) objects.push_back({{"name", o.name}, {"article", o.article}});
    return {{"objects", objects}, {"actions", actions_}, {"human", objects_.at(human_id_).name}};
}

CategoryTable CategoryTable::from_json(const nlohmann::json& j) {
    const auto& objs = require_field(j, "objects", kModule, "categories");
    const auto& acts = require_field(j, "actions", kModule, "categories");
    const auto& human = require_field(j, "human", kModule, "categories");
    if (!objs.is_array() || !acts.is_array() || !human.is_string()) {
        fail(ErrorKind::Validation, kModule, "categories: objects/actions must be arrays, human a string");
    }
    std::vector<ObjectCategory> objects;
    for (const auto& o : objs) {
        const auto& name = require_field(o, "name", kModule, "categories.objects[]");
        const auto& article = require_field(o, "article", kModule, "categories.objects[]");
        if (!name.is_string() || !article.is_string()) {
            fail(ErrorKind::Validation, kModule, "categories.objects[]: name/article must be strings");
        }
        objects.push_back({name.get<std::string>(), article.get<std::string>()});
    }
    std::vector<std::string> actions;
    for (const auto& a : acts) {
        if (!a.is_string()) fail(ErrorKind::Validation, kModule, "categories.actions[] must be strings");
        actions.push_back(a.get<std::string>());
    }
    return CategoryTable(std::move(objects), std::move(actions), human.get<std::string>());
}

CategoryTable load_categories(const std::filesystem::path& path) {
    return CategoryTable::from_json(read_json_file(path, kModule));
}

void write_categories(const std::filesystem::path& path, const CategoryTable& table) {
    write_json_file(path, table.to_json(), kModule);
}

const std::vector<ObjectCategory>& coco_objects_bank_first() {
    static const std::vector<ObjectCategory> table = {
        {"person", "a"}, {"bottle", "a"}, {"cup", "a"}, {"knife", "a"}, {"spoon", "a"},
        {"bowl", "a"}, {"sports ball", "a"}, {"baseball bat", "a"}, {"tennis racket", "a"}, {"cake", "a"},
        {"pizza", "a"}, {"apple", "an"}, {"orange", "an"}, {"wine glass", "a"}, {"sandwich", "a"},
        {"fork", "a"}, {"chair", "a"}, {"dining table", "a"}, {"umbrella", "an"}, {"bicycle", "a"},
        {"car", "a"}, {"motorcycle", "a"}, {"airplane", "an"}, {"bus", "a"}, {"train", "a"},
        {"truck", "a"}, {"boat", "a"}, {"traffic light", "a"}, {"fire hydrant", "a"}, {"stop sign", "a"},
        {"parking meter", "a"}, {"bench", "a"}, {"bird", "a"}, {"cat", "a"}, {"dog", "a"},
        {"horse", "a"}, {"sheep", "a"}, {"cow", "a"}, {"elephant", "an"}, {"bear", "a"},
        {"zebra", "a"}, {"giraffe", "a"}, {"backpack", "a"}, {"handbag", "a"}, {"tie", "a"},
        {"suitcase", "a"}, {"frisbee", "a"}, {"skis", "a"}, {"snowboard", "a"}, {"kite", "a"},
        {"baseball glove", "a"}, {"skateboard", "a"}, {"surfboard", "a"}, {"banana", "a"}, {"broccoli", "a"},
        {"carrot", "a"}, {"hot dog", "a"}, {"donut", "a"}, {"couch", "a"}, {"potted plant", "a"},
        {"bed", "a"}, {"toilet", "a"}, {"tv", "a"}, {"laptop", "a"}, {"mouse", "a"},
        {"remote", "a"}, {"keyboard", "a"}, {"cell phone", "a"}, {"microwave", "a"}, {"oven", "an"},
        {"toaster", "a"}, {"sink", "a"}, {"refrigerator", "a"}, {"book", "a"}, {"clock", "a"},
        {"vase", "a"}, {"scissors", "a"}, {"teddy bear", "a"}, {"hair drier", "a"}, {"toothbrush", "a"},
    };
    return table;
}

const std::vector<std::string>& default_action_names() {
    static const std::vector<std::string> names = {
        "no_interaction", "hold", "carry", "fill", "pour", "drink_with", "cut_with", "hit",
        "swing", "eat", "throw", "catch", "sit_on", "ride", "look_at", "wash",
        "lift", "stir", "serve", "kick", "open", "inspect", "repair", "push",
    };
    return names;
}

}  // namespace relhoi
