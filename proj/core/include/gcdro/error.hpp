#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gcdro {

enum class ErrorCode {
    InvalidDistribution,
    InvalidArguments,
    InvalidSpec,
    ShapeError,
    InvalidWeight,
    Diverged,
    InvalidAlpha,
    InvalidStepSize,
    InvalidObservation,
    DegenerateGroupPrior,
    MissingAttribute,
    IncompleteMergeMap,
    TooFewPoints,
    GenerationStalled,
    NoCheckpoints,
    InsufficientRecord,
    Config,
    Io,
};

std::string_view to_string(ErrorCode code);

// Every failure in the library surfaces as an Error carrying a code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace gcdro
