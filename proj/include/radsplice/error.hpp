#ifndef RADSPLICE_ERROR_HPP
#define RADSPLICE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace radsplice {

enum class ErrorCode {
    InvalidInput,
    NonMonotone,
    NoConvergence,
    Degenerate,
    Io,
    UnknownTable,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidInput: return "invalid-input";
        case ErrorCode::NonMonotone: return "non-monotone-regime";
        case ErrorCode::NoConvergence: return "no-convergence";
        case ErrorCode::Degenerate: return "degenerate-input";
        case ErrorCode::Io: return "io";
        case ErrorCode::UnknownTable: return "unknown-table";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace radsplice

#endif
