#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace attnlens {

enum class ErrorKind {
    dimension,
    numeric,
    input,
    training,
    estimation,
    size,
    build,
    not_found,
    sequencing,
    sampling,
    contract,
    io,
};

constexpr std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::numeric: return "numeric";
    case ErrorKind::input: return "input";
    case ErrorKind::training: return "training";
    case ErrorKind::estimation: return "estimation";
    case ErrorKind::size: return "size";
    case ErrorKind::build: return "build";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::sequencing: return "sequencing";
    case ErrorKind::sampling: return "sampling";
    case ErrorKind::contract: return "contract";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

// Every failure raised by the library carries a kind so callers (the CLI, the
// HTTP layer) can map it to an exit code or status without parsing messages.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace attnlens
