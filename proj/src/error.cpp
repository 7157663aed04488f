#include "relhoi/error.hpp"

namespace relhoi {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Shape: return "shape error";
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Validation: return "validation error";
        case ErrorKind::Config: return "config error";
        case ErrorKind::Format: return "format error";
        case ErrorKind::Index: return "index error";
        case ErrorKind::Internal: return "internal error";
        case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

Error::Error(ErrorKind kind, std::string module, std::string detail)
    : std::runtime_error("[" + module + "] " + to_string(kind) + ": " + detail),
      kind_(kind),
      module_(std::move(module)),
      detail_(std::move(detail)) {}

void fail(ErrorKind kind, const std::string& module, const std::string& detail) {
    throw Error(kind, module, detail);
}

}  // namespace relhoi
