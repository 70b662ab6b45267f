#pragma once

#include <stdexcept>
#include <string>

namespace ascl {

enum class ErrorCode {
    InvalidArgument,
    InvalidDistribution,
    InvalidLabel,
    EmptyBank,
    InvalidState,
    Io,
    Format,
};

const char* to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
    throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const char* what) {
    if (!cond) {
        throw Error(code, what);
    }
}

}  // namespace ascl
