#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace relhoi {

struct ObjectCategory {
    std::string name;
    std::string article;  // "a" or "an", from the table, never guessed
};

class CategoryTable {
public:
    CategoryTable() = default;
    CategoryTable(std::vector<ObjectCategory> objects, std::vector<std::string> actions, std::string human_name);

    std::size_t num_objects() const noexcept { return objects_.size(); }
    std::size_t num_actions() const noexcept { return actions_.size(); }
    int human_id() const noexcept { return human_id_; }
    bool is_human(int category) const noexcept { return category == human_id_; }
    bool valid_object(int category) const noexcept {
        return category >= 0 && static_cast<std::size_t>(category) < objects_.size();
    }

    const ObjectCategory& object(int category) const;
    const std::string& action(std::size_t id) const { return actions_.at(id); }
    const std::vector<ObjectCategory>& objects() const noexcept { return objects_; }
    const std::vector<std::string>& actions() const noexcept { return actions_; }

    std::optional<int> find_object(const std::string& name) const;

    // "a photo of a/an {object}" used for per-category text embeddings.
    std::string photo_prompt(int category) const;
    // "{prefix} person [ACT] {object}" shown by tooling; [ACT] stays symbolic.
    std::string interaction_prompt(int category, const std::vector<std::string>& prefix_words) const;

    nlohmann::json to_json() const;
    static CategoryTable from_json(const nlohmann::json& j);

private:
    std::vector<ObjectCategory> objects_;
    std::vector<std::string> actions_;
    int human_id_ = -1;
};

CategoryTable load_categories(const std::filesystem::path& path);
void write_categories(const std::filesystem::path& path, const CategoryTable& table);

// The 80 COCO object names with their articles, ordered so that categories
// that take part in the default affordance bank come first.
const std::vector<ObjectCategory>& coco_objects_bank_first();
const std::vector<std::string>& default_action_names();

}  // namespace relhoi
