#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace vsa {

// Error taxonomy. Kinds map onto process exit codes at the CLI boundary:
// validation-class errors -> 2, generation -> 3, state -> 4, internal -> 1.
enum class ErrorKind {
    validation,
    parse,
    dimension,
    domain,
    contract,
    ambiguity,
    io,
    generation,
    state,
    internal,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

    int exit_code() const {
        switch (kind_) {
            case ErrorKind::generation: return 3;
            case ErrorKind::state: return 4;
            case ErrorKind::internal: return 1;
            default: return 2;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool ok, ErrorKind kind, const std::string& message) {
    if (!ok) fail(kind, message);
}

}  // namespace vsa
