#include "relhoi/config.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "relhoi/error.hpp"
#include "relhoi/json_io.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "pipeline/config";

std::size_t positive_size(const nlohmann::json& obj, const std::string& key, const std::string& context) {
    const auto& v = require_field(obj, key, kModule, context);
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
        fail(ErrorKind::Config, kModule, context + "." + key + " must be a positive integer");
    }
    return v.get<std::size_t>();
}

double number_or(const nlohmann::json& obj, const std::string& key, double fallback) {
    const auto it = obj.find(key);
    if (it == obj.end()) return fallback;
    if (!it->is_number()) fail(ErrorKind::Config, kModule, key + " must be a number");
    return it->get<double>();
}

}  // namespace

void FusionConfig::validate() const {
    if (!std::isfinite(alpha) || alpha < 0) fail(ErrorKind::Config, kModule, "fusion.alpha must be >= 0");
    if (!std::isfinite(beta) || beta < 0) fail(ErrorKind::Config, kModule, "fusion.beta must be >= 0");
    if (!std::isfinite(lambda) || lambda <= 0) fail(ErrorKind::Config, kModule, "fusion.lambda must be > 0");
    if (!std::isfinite(lambda_train) || lambda_train <= 0) {
        fail(ErrorKind::Config, kModule, "fusion.lambda_train must be > 0");
    }
}

void FocalConfig::validate() const {
    if (!std::isfinite(gamma) || gamma < 0) fail(ErrorKind::Config, kModule, "focal.gamma must be >= 0");
    if (!std::isfinite(alpha) || alpha < 0 || alpha > 1) fail(ErrorKind::Config, kModule, "focal.alpha must be in [0,1]");
}

void EngineConfig::validate() const {
    if (dims.unary == 0 || dims.model == 0 || dims.context == 0 || dims.text == 0) {
        fail(ErrorKind::Config, kModule, "all dims must be positive");
    }
    if (heads == 0) fail(ErrorKind::Config, kModule, "heads must be positive");
    if (dims.model % heads != 0) fail(ErrorKind::Config, kModule, "dims.model must be divisible by heads");
    if (dims.context % heads != 0) fail(ErrorKind::Config, kModule, "dims.context must be divisible by heads");
    if (dims.model < 2 || dims.context < 2) fail(ErrorKind::Config, kModule, "decoder widths must be >= 2 for layer norm");
    if (blocks.binary == 0 || blocks.ternary == 0) fail(ErrorKind::Config, kModule, "decoder block count must be >= 1");
    if (blocks.contextual != 2) {
        fail(ErrorKind::Config, kModule, "contextual decoder has exactly 2 blocks (global, regional)");
    }
    if (prompt.act_length == 0) fail(ErrorKind::Config, kModule, "prompt.act_length must be >= 1");
    if (prompt.prefix_length() == 0) fail(ErrorKind::Config, kModule, "prompt prefix must be non-empty");
    fusion.validate();
    focal.validate();
}

nlohmann::json EngineConfig::to_json() const {
    nlohmann::json prefix;
    if (prompt.prefix_mode == PrefixMode::Manual) {
        prefix = {{"mode", "manual"}, {"words", prompt.prefix_words}};
    } else {
        prefix = {{"mode", "learned"}, {"length", prompt.learned_prefix_length}};
    }
    return {
        {"layout_version", layout_version},
        {"dims", {{"unary", dims.unary}, {"model", dims.model}, {"context", dims.context}, {"text", dims.text}}},
        {"heads", heads},
        {"blocks", {{"binary", blocks.binary}, {"ternary", blocks.ternary}, {"contextual", blocks.contextual}}},
        {"act_length", prompt.act_length},
        {"prefix", prefix},
        {"fusion",
         {{"alpha", fusion.alpha}, {"beta", fusion.beta}, {"lambda", fusion.lambda}, {"lambda_train", fusion.lambda_train}}},
        {"focal", {{"gamma", focal.gamma}, {"alpha", focal.alpha}}},
        {"categories", categories_path.generic_string()},
    };
}

EngineConfig EngineConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    EngineConfig c;
    if (!j.is_object()) fail(ErrorKind::Config, kModule, "config must be an object");
    c.layout_version = static_cast<int>(require_number(j, "layout_version", kModule, "config"));
    const auto& d = require_field(j, "dims", kModule, "config");
    c.dims.unary = positive_size(d, "unary", "dims");
    c.dims.model = positive_size(d, "model", "dims");
    c.dims.context = positive_size(d, "context", "dims");
    c.dims.text = positive_size(d, "text", "dims");
    c.heads = positive_size(j, "heads", "config");
    if (const auto it = j.find("blocks"); it != j.end()) {
        c.blocks.binary = positive_size(*it, "binary", "blocks");
        c.blocks.ternary = positive_size(*it, "ternary", "blocks");
        c.blocks.contextual = positive_size(*it, "contextual", "blocks");
    }
    if (j.contains("act_length")) c.prompt.act_length = positive_size(j, "act_length", "config");
    if (const auto it = j.find("prefix"); it != j.end()) {
        const auto& mode = require_field(*it, "mode", kModule, "prefix");
        if (mode == "manual") {
            c.prompt.prefix_mode = PrefixMode::Manual;
            c.prompt.prefix_words = require_field(*it, "words", kModule, "prefix").get<std::vector<std::string>>();
        } else if (mode == "learned") {
            c.prompt.prefix_mode = PrefixMode::Learned;
            c.prompt.learned_prefix_length = positive_size(*it, "length", "prefix");
        } else {
            fail(ErrorKind::Config, kModule, "prefix.mode must be \"manual\" or \"learned\"");
        }
    }
    if (const auto it = j.find("fusion"); it != j.end()) {
        c.fusion.alpha = number_or(*it, "alpha", c.fusion.alpha);
        c.fusion.beta = number_or(*it, "beta", c.fusion.beta);
        c.fusion.lambda = number_or(*it, "lambda", c.fusion.lambda);
        c.fusion.lambda_train = number_or(*it, "lambda_train", c.fusion.lambda_train);
    }
    if (const auto it = j.find("focal"); it != j.end()) {
        c.focal.gamma = number_or(*it, "gamma", c.focal.gamma);
        c.focal.alpha = number_or(*it, "alpha", c.focal.alpha);
    }
    if (const auto it = j.find("categories"); it != j.end()) {
        std::filesystem::path p = it->get<std::string>();
        c.categories_path = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
    }
    c.validate();
    return c;
}

EngineConfig load_engine_config(const std::filesystem::path& path) {
    return EngineConfig::from_json(read_json_file(path, kModule), path.parent_path());
}

void write_engine_config(const std::filesystem::path& path, const EngineConfig& config) {
    write_json_file(path, config.to_json(), kModule);
}

}  // namespace relhoi
