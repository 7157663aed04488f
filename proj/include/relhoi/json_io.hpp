#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

namespace relhoi {

// Parses a structured-text file. Malformed input becomes a parse error that
// carries the byte offset / line reported by the parser.
nlohmann::json read_json_file(const std::filesystem::path& path, const char* module);

// Writes with a fixed 2-space indent and trailing newline so identical values
// always produce identical bytes.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& value, const char* module);

// Typed field access that reports the missing/ill-typed field by name.
const nlohmann::json& require_field(const nlohmann::json& obj, const std::string& key, const char* module,
                                    const std::string& context);

double require_number(const nlohmann::json& obj, const std::string& key, const char* module,
                      const std::string& context);

}  // namespace relhoi
