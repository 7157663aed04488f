#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <unistd.h>

#include <gtest/gtest.h>

#include "relhoi/container.hpp"
#include "relhoi/error.hpp"
#include "relhoi/fixtures.hpp"
#include "relhoi/pipeline.hpp"
#include "relhoi/weights.hpp"

namespace relhoi::testing {

inline std::filesystem::path golden_dir() { return RELHOI_GOLDEN_DIR; }

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("relhoi_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

// A complete in-memory engine built from the fixture generator.
struct FixtureWorld {
    FixtureSpec spec;
    CategoryTable categories;
    KnowledgeBank bank;
    EngineConfig config;
    NamedTensors tensors;
    Engine engine;

    static FixtureWorld make(std::uint64_t seed = 42, FixtureSpec spec = {}) {
        CategoryTable categories = fixture_categories(spec);
        KnowledgeBank bank = fixture_bank(categories);
        EngineConfig config = fixture_config(spec);
        NamedTensors tensors = fixture_weights(seed, config, categories);
        ModelWeights weights = assemble_weights(tensors, config, categories.num_objects(), categories.num_actions());
        Engine engine(config, categories, std::move(weights), fnv1a_hex(encode_container(tensors)));
        return FixtureWorld{spec, std::move(categories), std::move(bank), std::move(config), std::move(tensors),
                            std::move(engine)};
    }

    Scene scene(std::size_t index, std::uint64_t seed = 42) const {
        return fixture_scene(seed, spec, categories, bank, index);
    }
};

template <typename Fn>
ErrorKind error_kind_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "expected relhoi::Error";
    return ErrorKind::Internal;
}

template <typename Fn>
std::string error_text_of(Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.what();
    }
    ADD_FAILURE() << "expected relhoi::Error";
    return {};
}

inline bool bits_equal(const Tensor& a, const Tensor& b) { return a.bitwise_equal(b); }

}  // namespace relhoi::testing
