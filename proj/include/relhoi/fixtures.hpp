#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "relhoi/categories.hpp"
#include "relhoi/config.hpp"
#include "relhoi/container.hpp"
#include "relhoi/evaluation.hpp"
#include "relhoi/scene.hpp"

namespace relhoi {

// One splitmix64 step: add the golden gamma, then apply the finalizer.
std::uint64_t mix64(std::uint64_t x);

// Counter-based random stream: value k is mix64(seed, stream, k). Any draw
// can be reproduced from (seed, stream name, counter) alone, so adding a
// stream never perturbs another one.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::string_view stream);

    std::uint64_t next_u64();
    // Uniform in [0, 1) with 24 bits of resolution, exact in float.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer in [lo, hi].
    std::size_t between(std::size_t lo, std::size_t hi);
    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

struct FixtureSpec {
    std::size_t scenes = 6;
    std::size_t min_detections = 3;
    std::size_t max_detections = 8;
    std::size_t min_humans = 1;
    std::size_t max_humans = 3;
    std::size_t grid_height = 3;
    std::size_t grid_width = 4;
    float image_width = 640;
    float image_height = 480;
    ModelDims dims{16, 16, 16, 8};
    std::size_t heads = 2;
    std::size_t num_objects = 20;  // first N of the bank-first COCO table
    std::size_t num_actions = 8;   // first N of the default action list
    std::size_t act_length = 4;
    std::size_t ground_truth_per_scene = 2;

    void validate() const;
    nlohmann::json to_json() const;
    static FixtureSpec from_json(const nlohmann::json& j);
};

FixtureSpec load_fixture_spec(const std::filesystem::path& path);

// In-memory building blocks, all pure functions of (seed, spec).
CategoryTable fixture_categories(const FixtureSpec& spec);
EngineConfig fixture_config(const FixtureSpec& spec);
KnowledgeBank fixture_bank(const CategoryTable& categories);
NamedTensors fixture_weights(std::uint64_t seed, const EngineConfig& config, const CategoryTable& categories);
Scene fixture_scene(std::uint64_t seed, const FixtureSpec& spec, const CategoryTable& categories,
                    const KnowledgeBank& bank, std::size_t index);
ImageGroundTruth fixture_ground_truth(std::uint64_t seed, const FixtureSpec& spec, const CategoryTable& categories,
                                      const Scene& scene, std::size_t index);

// Sinusoidal positional grid [H x W x D]: the first half of the channels
// encodes the row, the second half the column.
Tensor sinusoidal_grid(std::size_t height, std::size_t width, std::size_t channels);

// Writes the full tree:
//   categories.json config.json bank.json weights.crln ground_truth.json
//   scenes/scene_NNNN.{json,crln} manifest.json
// Returns the written paths relative to `out_dir`, in manifest order.
std::vector<std::string> generate_fixtures(std::uint64_t seed, const FixtureSpec& spec,
                                           const std::filesystem::path& out_dir);

}  // namespace relhoi
