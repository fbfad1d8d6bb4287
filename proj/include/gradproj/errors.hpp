#pragma once

#include <stdexcept>
#include <string>

namespace gradproj {

// Base for every error raised by the pipeline. The CLI maps the concrete
// subclass onto a process exit code.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid or inconsistent run configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or unusable input data: corpus, vectors, palettes (exit code 3).
class DataError : public Error {
public:
    using Error::Error;
};

// Non-finite values, domain violations, failed calibration (exit code 4).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace gradproj
