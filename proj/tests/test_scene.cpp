#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "relhoi/categories.hpp"
#include "relhoi/json_io.hpp"
#include "relhoi/scene.hpp"
#include "relhoi/weights.hpp"
#include "support.hpp"

namespace relhoi {
namespace {

using nlohmann::json;
using testing::error_kind_of;
using testing::error_text_of;
using testing::TempDir;

CategoryTable small_table() {
    return CategoryTable({{"person", "a"}, {"cup", "a"}, {"bottle", "a"}, {"apple", "an"}, {"umbrella", "an"}},
                         {"hold", "drink_with", "pour"}, "person");
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

// -- categories --------------------------------------------------------------

TEST(CategoryTableTest, ArticlesComeFromTheTable) {
    const CategoryTable t = small_table();
    EXPECT_EQ(t.human_id(), 0);
    EXPECT_EQ(t.photo_prompt(3), "a photo of an apple");
    EXPECT_EQ(t.photo_prompt(1), "a photo of a cup");
    EXPECT_EQ(t.interaction_prompt(4, {"a", "photo", "of", "a"}).find("umbrella") != std::string::npos, true);
    EXPECT_EQ(t.find_object("bottle"), 2);
    EXPECT_FALSE(t.find_object("car").has_value());
}

TEST(CategoryTableTest, InvalidTablesRejected) {
    EXPECT_EQ(error_kind_of([] { CategoryTable({{"cup", "a"}, {"cup", "a"}}, {"hold"}, "cup"); }),
              ErrorKind::Validation);
    EXPECT_EQ(error_kind_of([] { CategoryTable({{"cup", "the"}}, {"hold"}, "cup"); }), ErrorKind::Validation);
    EXPECT_EQ(error_kind_of([] { CategoryTable({{"cup", "a"}}, {"hold"}, "person"); }), ErrorKind::Validation);
    EXPECT_EQ(error_kind_of([] { CategoryTable({{"person", "a"}}, {}, "person"); }), ErrorKind::Validation);
    EXPECT_EQ(error_kind_of([] { CategoryTable({{"person", "a"}}, {"hold", "hold"}, "person"); }),
              ErrorKind::Validation);
}

TEST(CategoryTableTest, JsonRoundTrip) {
    TempDir dir("categories");
    const CategoryTable t = small_table();
    write_categories(dir / "c.json", t);
    const CategoryTable back = load_categories(dir / "c.json");
    EXPECT_EQ(back.to_json(), t.to_json());
    EXPECT_EQ(back.object(3).article, "an");
}

TEST(CategoryTableTest, CocoTableIsComplete) {
    const auto& coco = coco_objects_bank_first();
    EXPECT_EQ(coco.size(), 80u);
    const CategoryTable t(coco, default_action_names(), "person");
    EXPECT_EQ(t.photo_prompt(*t.find_object("orange")), "a photo of an orange");
    EXPECT_EQ(t.photo_prompt(*t.find_object("umbrella")), "a photo of an umbrella");
    EXPECT_EQ(t.photo_prompt(*t.find_object("cup")), "a photo of a cup");
}

// -- scenes -------------------------------------------------------------------

class SceneFileTest : public ::testing::Test {
protected:
    void SetUp() override {
        generate_fixtures(42, FixtureSpec{}, dir_.path());
        categories_ = load_categories(dir_ / "categories.json");
        scene_json_ = read_json_file(dir_ / "scenes/scene_0000.json", "test");
    }

    std::filesystem::path write_variant(const json& j) {
        const auto p = dir_ / "scenes/variant.json";
        write_json_file(p, j, "test");
        return p;
    }

    TempDir dir_{"scenes"};
    CategoryTable categories_;
    json scene_json_;
};

TEST_F(SceneFileTest, LoadsFixtureScene) {
    const Scene s = load_scene(dir_ / "scenes/scene_0000.json", categories_, 16);
    EXPECT_EQ(s.image_id, "scene_0000");
    EXPECT_EQ(s.size.width, 640.0f);
    EXPECT_GE(s.detections.size(), 3u);
    EXPECT_EQ(s.context.spatial.dims(), (Dims{3, 4, 16}));
    EXPECT_EQ(s.context.cells(), 12u);
    EXPECT_EQ(s.context.flat_spatial().dims(), (Dims{12, 16}));
}

TEST_F(SceneFileTest, EmptyDetectionsAllowed) {
    json j = scene_json_;
    j["detections"] = json::array();
    const Scene s = load_scene(write_variant(j), categories_);
    EXPECT_TRUE(s.detections.empty());
}

TEST_F(SceneFileTest, CategoryByName) {
    json j = scene_json_;
    j["detections"][0]["category"] = "cup";
    const Scene s = load_scene(write_variant(j), categories_);
    EXPECT_EQ(s.detections[0].category, *categories_.find_object("cup"));
}

TEST_F(SceneFileTest, WriteReadRoundTrip) {
    const Scene s = load_scene(dir_ / "scenes/scene_0001.json", categories_);
    write_scene(dir_ / "copy.json", s);
    const Scene back = load_scene(dir_ / "copy.json", categories_);
    ASSERT_EQ(back.detections.size(), s.detections.size());
    for (std::size_t i = 0; i < s.detections.size(); ++i) {
        EXPECT_EQ(back.detections[i].box, s.detections[i].box);
        EXPECT_EQ(back.detections[i].feature, s.detections[i].feature);
        EXPECT_EQ(back.detections[i].score, s.detections[i].score);
    }
    EXPECT_TRUE(back.context.spatial.bitwise_equal(s.context.spatial));
    EXPECT_EQ(read_file_bytes(dir_ / "copy.crln"), read_file_bytes(dir_ / "scenes/scene_0001.crln"));
}

TEST_F(SceneFileTest, MalformedJsonReportsOffset) {
    write_text(dir_ / "scenes/bad.json", "{\"image_id\": \"x\", \"width\": 640,, }");
    const std::string msg = error_text_of([&] { load_scene(dir_ / "scenes/bad.json", categories_); });
    EXPECT_NE(msg.find("byte offset"), std::string::npos) << msg;
    EXPECT_EQ(error_kind_of([&] { load_scene(dir_ / "scenes/bad.json", categories_); }), ErrorKind::Parse);
}

TEST_F(SceneFileTest, MissingFilesAreIoErrors) {
    EXPECT_EQ(error_kind_of([&] { load_scene(dir_ / "scenes/none.json", categories_); }), ErrorKind::Io);
    json j = scene_json_;
    j["context"]["container"] = "none.crln";
    EXPECT_EQ(error_kind_of([&] { load_scene(write_variant(j), categories_); }), ErrorKind::Io);
}

TEST_F(SceneFileTest, FeatureWidthChecked) {
    EXPECT_EQ(error_kind_of([&] { load_scene(dir_ / "scenes/scene_0000.json", categories_, 15); }),
              ErrorKind::Validation);
}

// Each mutation either keeps every type invariant (accept) or breaks exactly one (reject).
TEST_F(SceneFileTest, MutationFuzzAcceptsExactlyValidScenes) {
    struct Mutation {
        const char* name;
        std::function<void(json&)> apply;
        bool valid;
    };
    const std::vector<Mutation> mutations = {
        {"score one", [](json& j) { j["detections"][0]["score"] = 1.0; }, true},
        {"score zero", [](json& j) { j["detections"][0]["score"] = 0.0; }, true},
        {"score above one", [](json& j) { j["detections"][0]["score"] = 1.0001; }, false},
        {"negative score", [](json& j) { j["detections"][1]["score"] = -0.01; }, false},
        {"string score", [](json& j) { j["detections"][1]["score"] = "high"; }, false},
        {"degenerate box", [](json& j) { j["detections"][0]["box"] = {5, 5, 5, 5}; }, true},
        {"inverted box", [](json& j) { j["detections"][0]["box"] = {50, 5, 40, 10}; }, false},
        {"three-value box", [](json& j) { j["detections"][0]["box"] = {1, 2, 3}; }, false},
        {"huge coordinate", [](json& j) { j["detections"][0]["box"][2] = 1e300; }, false},
        {"unknown category name", [](json& j) { j["detections"][0]["category"] = "spaceship"; }, false},
        {"category id out of range", [](json& j) { j["detections"][0]["category"] = 20; }, false},
        {"last category id", [](json& j) { j["detections"][0]["category"] = 19; }, true},
        {"negative category", [](json& j) { j["detections"][0]["category"] = -1; }, false},
        {"short feature", [](json& j) { j["detections"][1]["feature"].erase(0); }, false},
        {"empty features everywhere",
         [](json& j) {
             for (auto& d : j["detections"]) d["feature"] = json::array();
         },
         false},
        {"non-numeric feature", [](json& j) { j["detections"][0]["feature"][3] = nullptr; }, false},
        {"missing box", [](json& j) { j["detections"][0].erase("box"); }, false},
        {"zero width", [](json& j) { j["width"] = 0; }, false},
        {"negative height", [](json& j) { j["height"] = -480; }, false},
        {"numeric image id", [](json& j) { j["image_id"] = 7; }, false},
        {"detections not a list", [](json& j) { j["detections"] = json::object(); }, false},
        {"unknown spatial tensor", [](json& j) { j["context"]["spatial"] = "nope"; }, false},
        {"positions swapped with spatial",
         [](json& j) {
             j["context"]["spatial"] = "positions";
             j["context"]["positions"] = "spatial";
         },
         true},
        {"extra field ignored", [](json& j) { j["comment"] = "hi"; }, true},
    };
    for (const auto& m : mutations) {
        json j = scene_json_;
        m.apply(j);
        const auto p = write_variant(j);
        bool accepted = true;
        try {
            load_scene(p, categories_, 16);
        } catch (const Error& e) {
            accepted = false;
            EXPECT_EQ(e.kind(), ErrorKind::Validation) << m.name << ": " << e.what();
            EXPECT_EQ(e.module(), "scene-model") << m.name;
        }
        EXPECT_EQ(accepted, m.valid) << m.name;
    }
}

TEST_F(SceneFileTest, ContextGridShapeChecked) {
    write_tensor_container(dir_ / "scenes/grid.crln",
                           {{"spatial", Tensor::zeros({3, 4, 16})}, {"positions", Tensor::zeros({4, 3, 16})}});
    json j = scene_json_;
    j["context"]["container"] = "grid.crln";
    EXPECT_NE(error_text_of([&] { load_scene(write_variant(j), categories_); }).find("positions"), std::string::npos);

    write_tensor_container(dir_ / "scenes/flat.crln",
                           {{"spatial", Tensor::zeros({12, 16})}, {"positions", Tensor::zeros({12, 16})}});
    j["context"]["container"] = "flat.crln";
    EXPECT_EQ(error_kind_of([&] { load_scene(write_variant(j), categories_); }), ErrorKind::Validation);
}

// -- knowledge bank -------------------------------------------------------------

TEST(BankTest, SelfPairRejected) {
    TempDir dir("bank");
    const CategoryTable t = small_table();
    write_text(dir / "b.json", R"([{"object": "cup", "tool": "cup"}])");
    EXPECT_EQ(error_kind_of([&] { load_bank(dir / "b.json", t); }), ErrorKind::Validation);
    EXPECT_EQ(error_kind_of([&] { KnowledgeBank({{1, 1}}, t); }), ErrorKind::Validation);
}

TEST(BankTest, NamesAndIdsBothAccepted) {
    TempDir dir("bank");
    const CategoryTable t = small_table();
    write_text(dir / "b.json", R"([{"object": "cup", "tool": "bottle"}, {"object": 2, "tool": 1}])");
    const KnowledgeBank bank = load_bank(dir / "b.json", t);
    EXPECT_TRUE(bank.licenses(1, 2));
    EXPECT_TRUE(bank.licenses(2, 1));
    EXPECT_FALSE(bank.licenses(1, 3));
    write_bank(dir / "c.json", bank, t);
    EXPECT_EQ(load_bank(dir / "c.json", t).pairs(), bank.pairs());
}

TEST(BankTest, InvalidEntries) {
    TempDir dir("bank");
    const CategoryTable t = small_table();
    for (const char* text : {R"({"object": "cup"})", R"([{"object": "cup"}])", R"([{"object": "cup", "tool": "car"}])",
                             R"([{"object": 1, "tool": 99}])", R"([{"object": true, "tool": 2}])"}) {
        write_text(dir / "b.json", text);
        EXPECT_EQ(error_kind_of([&] { load_bank(dir / "b.json", t); }), ErrorKind::Validation) << text;
    }
    write_text(dir / "b.json", "[");
    EXPECT_EQ(error_kind_of([&] { load_bank(dir / "b.json", t); }), ErrorKind::Parse);
}

TEST(BankTest, EmptyBankIsValid) {
    TempDir dir("bank");
    write_text(dir / "b.json", "[]");
    EXPECT_TRUE(load_bank(dir / "b.json", small_table()).empty());
}

TEST(BankTest, QueryTemplateDocumented) {
    EXPECT_EQ(std::string(kBankQueryTemplate), "Can {X} be a tool for a human to interact with {Y}?");
}

// -- weights -----------------------------------------------------------------

class WeightsTest : public ::testing::Test {
protected:
    FixtureSpec spec_;
    CategoryTable categories_ = fixture_categories(spec_);
    EngineConfig config_ = fixture_config(spec_);
    NamedTensors tensors_ = fixture_weights(42, config_, categories_);

    ModelWeights assemble(const NamedTensors& t) const {
        return assemble_weights(t, config_, categories_.num_objects(), categories_.num_actions());
    }
};

TEST_F(WeightsTest, FixtureWeightsMatchSchema) {
    const auto schema = weight_schema(config_, categories_.num_objects(), categories_.num_actions());
    ASSERT_EQ(schema.size(), tensors_.size());
    const ModelWeights w = assemble(tensors_);
    EXPECT_EQ(w.binary.blocks.size(), 2u);
    EXPECT_EQ(w.ternary.blocks.size(), 2u);
    EXPECT_EQ(w.contextual.blocks.size(), 2u);
    EXPECT_EQ(w.prompt.act.dims(), (Dims{4, 8}));
    EXPECT_EQ(w.prompt.prefix.dims(), (Dims{4, 8}));
    EXPECT_EQ(w.object_text.dims(), (Dims{20, 8}));
    EXPECT_EQ(w.binary_pos.first.in_features(), kSpatialWidth);
    EXPECT_EQ(w.ternary_pos.first.in_features(), kTripletSpatialWidth);
    EXPECT_EQ(w.unary.first.in_features(), 16u + 8u);
    EXPECT_EQ(w.binary_head.out_features(), 8u);
}

TEST_F(WeightsTest, MissingTensorIsNamed) {
    NamedTensors t = tensors_;
    const std::string victim = t[5].first;
    t.erase(t.begin() + 5);
    const std::string msg = error_text_of([&] { assemble(t); });
    EXPECT_NE(msg.find(victim), std::string::npos) << msg;
}

TEST_F(WeightsTest, WrongDimsAreNamed) {
    NamedTensors t = tensors_;
    t[3].second = Tensor::zeros({1, 1});
    const std::string msg = error_text_of([&] { assemble(t); });
    EXPECT_NE(msg.find(t[3].first), std::string::npos) << msg;
}

TEST_F(WeightsTest, UnexpectedTensorRejected) {
    NamedTensors t = tensors_;
    t.emplace_back("stray", Tensor::vector({1}));
    EXPECT_NE(error_text_of([&] { assemble(t); }).find("stray"), std::string::npos);
}

TEST_F(WeightsTest, LayoutVersionTagged) {
    NamedTensors t = tensors_;
    replace_tensor(t, kLayoutVersionTensor, Tensor::vector({2}));
    EXPECT_NE(error_text_of([&] { assemble(t); }).find("layout version"), std::string::npos);
}

TEST_F(WeightsTest, FileRoundTripIsBitIdentical) {
    TempDir dir("weights");
    write_tensor_container(dir / "w.crln", tensors_);
    const LoadedWeights loaded =
        load_weights(dir / "w.crln", config_, categories_.num_objects(), categories_.num_actions());
    EXPECT_EQ(loaded.digest, fnv1a_hex(encode_container(tensors_)));
    EXPECT_TRUE(loaded.model.binary.blocks[1].ffn.second.weight.bitwise_equal(
        assemble(tensors_).binary.blocks[1].ffn.second.weight));
    EXPECT_EQ(encode_container(read_tensor_container(dir / "w.crln")), encode_container(tensors_));
}

TEST_F(WeightsTest, ZeroWeightsAssemble) {
    const NamedTensors zeros = zero_weight_tensors(config_, categories_.num_objects(), categories_.num_actions());
    const ModelWeights w = assemble(zeros);
    for (float v : w.pair.first.weight.values()) EXPECT_EQ(v, 0.0f);
    for (float v : w.binary.blocks[0].norm_gain.values()) EXPECT_EQ(v, 1.0f);
}

}  // namespace
}  // namespace relhoi
