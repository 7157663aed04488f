#include "relhoi/json_io.hpp"

#include <fstream>
#include <sstream>

#include "relhoi/error.hpp"

namespace relhoi {

nlohmann::json read_json_file(const std::filesystem::path& path, const char* module) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, module, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return nlohmann::json::parse(buffer.str());
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorKind::Parse, module, path.string() + ": " + e.what() + " (byte offset " + std::to_string(e.byte) + ")");
    }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& value, const char* module) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, module, "cannot write " + path.string());
    out << value.dump(2) << '\n';
    if (!out) fail(ErrorKind::Io, module, "short write to " + path.string());
}

const nlohmann::json& require_field(const nlohmann::json& obj, const std::string& key, const char* module,
                                    const std::string& context) {
    if (!obj.is_object()) fail(ErrorKind::Validation, module, context + " must be an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(ErrorKind::Validation, module, context + "." + key + " is missing");
    return *it;
}

double require_number(const nlohmann::json& obj, const std::string& key, const char* module,
                      const std::string& context) {
    const auto& v = require_field(obj, key, module, context);
    if (!v.is_number()) fail(ErrorKind::Validation, module, context + "." + key + " must be a number");
    return v.get<double>();
}

}  // namespace relhoi
