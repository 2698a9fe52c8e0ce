#pragma once

#include <stdexcept>
#include <string>

namespace ccd {

/// Malformed input text (scenario files, CSV).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A value that parsed fine but violates a documented invariant.
class ValidationError : public std::invalid_argument {
public:
    ValidationError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Gram matrix stayed non-positive-definite after maximal jitter.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace ccd
