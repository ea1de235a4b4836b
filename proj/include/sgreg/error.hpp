#pragma once

#include <stdexcept>
#include <string>

namespace sgreg {

enum class ErrorCode {
    invalid_argument,
    dimension_mismatch,
    io_failure,
    bad_format,
    empty_structure,
    numeric_failure,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string &what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string &msg) {
    throw Error(code, msg);
}

} // namespace sgreg
