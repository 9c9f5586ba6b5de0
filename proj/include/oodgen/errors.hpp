#pragma once

#include <stdexcept>
#include <string>

namespace oodgen {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Dimension or shape mismatch between tensors.
struct ShapeError : Error {
    using Error::Error;
};

/// Invalid parameter value or malformed content.
struct ValueError : Error {
    using Error::Error;
};

/// File system failure (open, read, write).
struct IoError : Error {
    using Error::Error;
};

/// A pipeline stage input that should exist on disk does not.
struct MissingArtifactError : Error {
    using Error::Error;
};

/// Non-finite values or degenerate numerical state.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace oodgen
