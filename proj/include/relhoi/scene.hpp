#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "relhoi/categories.hpp"
#include "relhoi/geometry.hpp"
#include "relhoi/tensor.hpp"

namespace relhoi {

struct Detection {
    Box box;
    float score = 0;
    int category = 0;
    std::vector<float> feature;  // unary instance feature, width C
};

// Image feature grid V_e and its positional grid S, both [H' x W' x D].
struct SceneContext {
    Tensor spatial;
    Tensor positions;

    std::size_t cells() const { return spatial.dims().at(0) * spatial.dims().at(1); }
    std::size_t width() const { return spatial.dims().at(2); }
    // Flattened to [(H'W') x D] in row-major cell order.
    Tensor flat_spatial() const;
    Tensor flat_positions() const;
};

struct Scene {
    std::string image_id;
    ImageSize size;
    std::vector<Detection> detections;
    SceneContext context;

    std::vector<Box> boxes() const;
};

// Ordered (object, tool) category pairs licensing ternary tokens.
class KnowledgeBank {
public:
    KnowledgeBank() = default;
    KnowledgeBank(std::set<std::pair<int, int>> pairs, const CategoryTable& categories);

    bool licenses(int object_category, int tool_category) const {
        return pairs_.count({object_category, tool_category}) != 0;
    }
    const std::set<std::pair<int, int>>& pairs() const noexcept { return pairs_; }
    bool empty() const noexcept { return pairs_.empty(); }

private:
    std::set<std::pair<int, int>> pairs_;
};

// Validates every Detection/SceneContext invariant. When `feature_dim` is
// given, unary features must have exactly that width.
void validate_scene(const Scene& scene, const CategoryTable& categories,
                    std::optional<std::size_t> feature_dim = std::nullopt);

// Scene files are structured text; context tensors live in a sibling container
// referenced by name.
Scene load_scene(const std::filesystem::path& path, const CategoryTable& categories,
                 std::optional<std::size_t> feature_dim = std::nullopt);

// Writes `<stem>.json` and the context container `<stem>.crln` next to it.
void write_scene(const std::filesystem::path& json_path, const Scene& scene);

KnowledgeBank load_bank(const std::filesystem::path& path, const CategoryTable& categories);
void write_bank(const std::filesystem::path& path, const KnowledgeBank& bank, const CategoryTable& categories);

// Query template used to curate the bank offline; kept for documentation and
// tooling, the engine itself never queries a language model.
inline constexpr const char* kBankQueryTemplate = "Can {X} be a tool for a human to interact with {Y}?";

}  // namespace relhoi
