#pragma once

#include <stdexcept>
#include <string>

namespace lmatch {

// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input raster / field has the wrong shape (channel count, size mismatch).
class ShapeError : public Error {
public:
    using Error::Error;
};

// A numeric parameter is outside its allowed range.
class ParameterError : public Error {
public:
    using Error::Error;
};

// Inconsistent configuration (missing codebook, unknown family, bad schema).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Training data cannot be used (no labelled pixels, empty pairs).
class DataError : public Error {
public:
    using Error::Error;
};

// A computation produced a non-finite value.
class NumericError : public Error {
public:
    using Error::Error;
};

// A file could not be parsed or written.
class FormatError : public Error {
public:
    using Error::Error;
};

} // namespace lmatch
