#pragma once

#include <stdexcept>
#include <string>

namespace relhoi {

enum class ErrorKind {
    Shape,       // dimension / width mismatch
    Parse,       // malformed structured text
    Validation,  // well-formed input that breaks a type invariant
    Config,      // bad configuration values
    Format,      // binary container: bad magic, truncation, duplicate names
    Index,       // index out of range
    Internal,    // broken internal consistency
    Io,          // file could not be opened / written
};

const char* to_string(ErrorKind kind) noexcept;

// All library failures are reported as relhoi::Error. The message is prefixed
// with the originating module and, when known, the offending tensor/field.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string module, std::string detail);

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& module() const noexcept { return module_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorKind kind_;
    std::string module_;
    std::string detail_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& module, const std::string& detail);

}  // namespace relhoi
