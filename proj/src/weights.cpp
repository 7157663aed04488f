#include "relhoi/weights.hpp"

#include <map>

#include "relhoi/error.hpp"
#include "relhoi/geometry.hpp"

namespace relhoi {

namespace {

constexpr const char* kModule = "scene-model/weights";

void add_linear(std::vector<WeightSpec>& s, const std::string& prefix, std::size_t in, std::size_t out) {
    s.push_back({prefix + ".weight", {in, out}, WeightInit::ScaledUniform, in});
    s.push_back({prefix + ".bias", {out}, WeightInit::ScaledUniform, in});
}

void add_mlp(std::vector<WeightSpec>& s, const std::string& prefix, std::size_t in, std::size_t out) {
    const std::size_t hidden = mlp_hidden_width(out);
    add_linear(s, prefix + ".0", in, hidden);
    add_linear(s, prefix + ".1", hidden, out);
}

void add_norm(std::vector<WeightSpec>& s, const std::string& prefix, std::size_t width) {
    s.push_back({prefix + ".gain", {width}, WeightInit::Ones, 1});
    s.push_back({prefix + ".bias", {width}, WeightInit::Zeros, 1});
}

void add_attention(std::vector<WeightSpec>& s, const std::string& prefix, std::size_t width) {
    for (const char* proj : {"query", "key", "value", "output"}) add_linear(s, prefix + "." + proj, width, width);
    add_norm(s, prefix + ".norm", width);
}

void add_decoder(std::vector<WeightSpec>& s, const std::string& prefix, std::size_t blocks, std::size_t width) {
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::string bp = prefix + ".block" + std::to_string(b);
        add_attention(s, bp + ".self", width);
        add_attention(s, bp + ".cross", width);
        add_mlp(s, bp + ".ffn", width, width);
        add_norm(s, bp + ".norm", width);
    }
}

class Binder {
public:
    explicit Binder(const NamedTensors& tensors) {
        for (const auto& [name, t] : tensors) by_name_.emplace(name, &t);
    }

    const Tensor& get(const std::string& name) const {
        const auto it = by_name_.find(name);
        if (it == by_name_.end()) fail(ErrorKind::Internal, kModule, "unbound tensor '" + name + "'");
        return *it->second;
    }

    Linear linear(const std::string& p) const { return Linear{get(p + ".weight"), get(p + ".bias")}; }
    Mlp mlp(const std::string& p) const { return Mlp{linear(p + ".0"), linear(p + ".1")}; }

    AttentionWeights attention(const std::string& p) const {
        return AttentionWeights{linear(p + ".query"), linear(p + ".key"),        linear(p + ".value"),
                                linear(p + ".output"), get(p + ".norm.gain"), get(p + ".norm.bias")};
    }

    DecoderWeights decoder(const std::string& p, std::size_t blocks) const {
        DecoderWeights d;
        for (std::size_t b = 0; b < blocks; ++b) {
            const std::string bp = p + ".block" + std::to_string(b);
            d.blocks.push_back(DecoderBlockWeights{attention(bp + ".self"), attention(bp + ".cross"), mlp(bp + ".ffn"),
                                                   get(bp + ".norm.gain"), get(bp + ".norm.bias")});
        }
        return d;
    }

private:
    std::map<std::string, const Tensor*> by_name_;
};

}  // namespace

std::vector<WeightSpec> weight_schema(const EngineConfig& config, std::size_t num_objects, std::size_t num_actions) {
    config.validate();
    const std::size_t C = config.dims.unary, D = config.dims.model, Cp = config.dims.context, E = config.dims.text;
    std::vector<WeightSpec> s;
    s.push_back({kLayoutVersionTensor, {1}, WeightInit::LayoutTag, 1});
    add_mlp(s, "unary.mlp", C + E, D);
    add_mlp(s, "pair.mlp", 2 * D, D);
    add_mlp(s, "triplet.mlp", 3 * D, D);
    add_mlp(s, "position.binary.mlp", kSpatialWidth, D);
    add_mlp(s, "position.ternary.mlp", kTripletSpatialWidth, D);
    add_mlp(s, "context.pair.mlp", 2 * C, Cp);
    add_linear(s, "context.global_proj", D, Cp);
    add_decoder(s, "decoder.binary", config.blocks.binary, D);
    add_decoder(s, "decoder.ternary", config.blocks.ternary, D);
    add_decoder(s, "decoder.contextual", config.blocks.contextual, Cp);
    add_linear(s, "head.binary", D, num_actions);
    add_linear(s, "head.ternary", D, num_actions);
    add_linear(s, "head.semantic", Cp, num_actions);
    s.push_back({"prompt.prefix", {config.prompt.prefix_length(), E}, WeightInit::Embedding, 1});
    s.push_back({"prompt.act", {config.prompt.act_length, E}, WeightInit::Embedding, 1});
    s.push_back({"prompt.person", {E}, WeightInit::Embedding, 1});
    add_linear(s, "prompt.projection", 4 * E, Cp);
    s.push_back({"text.objects", {num_objects, E}, WeightInit::Embedding, 1});
    return s;
}

ModelWeights assemble_weights(const NamedTensors& tensors, const EngineConfig& config, std::size_t num_objects,
                              std::size_t num_actions) {
    const auto schema = weight_schema(config, num_objects, num_actions);
    std::map<std::string, const Tensor*> present;
    for (const auto& [name, t] : tensors) present.emplace(name, &t);

    for (const auto& spec : schema) {
        const auto it = present.find(spec.name);
        if (it == present.end()) fail(ErrorKind::Validation, kModule, "missing tensor '" + spec.name + "'");
        if (it->second->dims() != spec.dims) {
            fail(ErrorKind::Validation, kModule,
                 "tensor '" + spec.name + "' has dims " + dims_to_string(it->second->dims()) + ", expected " +
                     dims_to_string(spec.dims));
        }
    }
    if (present.size() != schema.size()) {
        for (const auto& [name, t] : tensors) {
            bool known = false;
            for (const auto& spec : schema) known = known || spec.name == name;
            if (!known) fail(ErrorKind::Validation, kModule, "unexpected tensor '" + name + "'");
        }
    }
    const float tag = (*present.at(kLayoutVersionTensor))[0];
    if (tag != static_cast<float>(kWeightsLayoutVersion) || config.layout_version != kWeightsLayoutVersion) {
        fail(ErrorKind::Validation, kModule,
             "layout version mismatch: weights " + std::to_string(tag) + ", config " +
                 std::to_string(config.layout_version) + ", engine " + std::to_string(kWeightsLayoutVersion));
    }

    const Binder b(tensors);
    ModelWeights w;
    w.unary = b.mlp("unary.mlp");
    w.pair = b.mlp("pair.mlp");
    w.triplet = b.mlp("triplet.mlp");
    w.binary_pos = b.mlp("position.binary.mlp");
    w.ternary_pos = b.mlp("position.ternary.mlp");
    w.context_pair = b.mlp("context.pair.mlp");
    w.global_proj = b.linear("context.global_proj");
    w.binary = b.decoder("decoder.binary", config.blocks.binary);
    w.ternary = b.decoder("decoder.ternary", config.blocks.ternary);
    w.contextual = b.decoder("decoder.contextual", config.blocks.contextual);
    w.binary_head = b.linear("head.binary");
    w.ternary_head = b.linear("head.ternary");
    w.semantic_head = b.linear("head.semantic");
    w.prompt = PromptWeights{b.get("prompt.prefix"), b.get("prompt.act"), b.get("prompt.person"),
                             b.linear("prompt.projection")};
    w.object_text = b.get("text.objects");
    return w;
}

NamedTensors zero_weight_tensors(const EngineConfig& config, std::size_t num_objects, std::size_t num_actions) {
    NamedTensors out;
    for (const auto& spec : weight_schema(config, num_objects, num_actions)) {
        float fill = 0.0f;
        if (spec.init == WeightInit::Ones) fill = 1.0f;
        if (spec.init == WeightInit::LayoutTag) fill = static_cast<float>(kWeightsLayoutVersion);
        out.emplace_back(spec.name, Tensor::filled(spec.dims, fill));
    }
    return out;
}

void replace_tensor(NamedTensors& tensors, const std::string& name, Tensor value) {
    for (auto& [n, t] : tensors) {
        if (n != name) continue;
        if (t.dims() != value.dims()) {
            fail(ErrorKind::Shape, kModule,
                 "replacement for '" + name + "' has dims " + dims_to_string(value.dims()) + ", expected " +
                     dims_to_string(t.dims()));
        }
        t = std::move(value);
        return;
    }
    fail(ErrorKind::Validation, kModule, "no tensor named '" + name + "'");
}

LoadedWeights load_weights(const std::filesystem::path& path, const EngineConfig& config, std::size_t num_objects,
                           std::size_t num_actions) {
    const auto bytes = read_file_bytes(path);
    const auto tensors = decode_container(bytes);
    return LoadedWeights{assemble_weights(tensors, config, num_objects, num_actions), fnv1a_hex(bytes)};
}

}  // namespace relhoi
