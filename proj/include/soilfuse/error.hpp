#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace soilfuse {

enum class ErrorCode {
    InvalidValue,
    UnknownCode,
    MalformedHeader,
    ShapeMismatch,
    NonNumericCell,
    SchemaMismatch,
    FeatureCollision,
    UnknownSample,
    UnknownFeature,
    ConstantColumn,
    NotFound,
    ExternalUnavailable,
    TooManyFeatures,
    UnknownRegion,
    Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-checkable error category.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace soilfuse
