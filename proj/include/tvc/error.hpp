#pragma once

#include <stdexcept>
#include <string>

namespace tvc {

enum class ErrorCode {
    SCHEMA_ERROR,
    INVARIANT_ERROR,
    REDUCIBLE_CHAIN,
    TOO_MANY_RECTS,
    IO_ERROR,
    PARSE_ERROR,
    NON_MONOTONE_TIME,
    NO_HIT_POSSIBLE,
    NO_MEETING_POSSIBLE,
    STEP_TOO_COARSE,
    USAGE_ERROR,
};

inline const char* to_string(ErrorCode c) {
    switch (c) {
        case ErrorCode::SCHEMA_ERROR: return "SCHEMA_ERROR";
        case ErrorCode::INVARIANT_ERROR: return "INVARIANT_ERROR";
        case ErrorCode::REDUCIBLE_CHAIN: return "REDUCIBLE_CHAIN";
        case ErrorCode::TOO_MANY_RECTS: return "TOO_MANY_RECTS";
        case ErrorCode::IO_ERROR: return "IO_ERROR";
        case ErrorCode::PARSE_ERROR: return "PARSE_ERROR";
        case ErrorCode::NON_MONOTONE_TIME: return "NON_MONOTONE_TIME";
        case ErrorCode::NO_HIT_POSSIBLE: return "NO_HIT_POSSIBLE";
        case ErrorCode::NO_MEETING_POSSIBLE: return "NO_MEETING_POSSIBLE";
        case ErrorCode::STEP_TOO_COARSE: return "STEP_TOO_COARSE";
        case ErrorCode::USAGE_ERROR: return "USAGE_ERROR";
    }
    return "UNKNOWN";
}

// Domain error carrying a machine-checkable code plus a message that names
// the offending node/period/community where applicable.
class Error : public std::runtime_error {
  public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const { return code_; }

  private:
    ErrorCode code_;
};

}  // namespace tvc
