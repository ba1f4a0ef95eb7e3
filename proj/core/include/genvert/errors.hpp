#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace genvert {

enum class ErrorCode {
    DimensionMismatch,
    NonFinite,
    InvalidArgument,
    SingularMatrix,
    RankDeficient,
    IterationLimit,
    InsufficientActiveRows,
    NotRealizable,
    NeverFeasible,
    UnboundedRelaxation,
    ParseError,
    ValidationError,
};

std::string_view to_string(ErrorCode code);

/// Single exception type for the library; callers dispatch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message)
    {
    }

    ErrorCode code() const noexcept { return code_; }
    /// what() without the code prefix.
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

/// Raised by the multi-layer drivers; layer() is 1-based (layer 1 consumes the latent code).
class LayerError : public Error {
public:
    LayerError(ErrorCode code, std::size_t layer, const std::string& message)
        : Error(code, "layer " + std::to_string(layer) + ": " + message), layer_(layer)
    {
    }

    std::size_t layer() const noexcept { return layer_; }

private:
    std::size_t layer_;
};

}  // namespace genvert
