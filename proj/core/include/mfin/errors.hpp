#pragma once

#include <stdexcept>
#include <string>

namespace mfin {

// Error taxonomy maps 1:1 onto CLI exit codes (2/3/4).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown by the guarded panel when anything touches data beyond the
// allowed date bound in realistic mode.
class LookaheadViolation : public std::logic_error {
public:
    explicit LookaheadViolation(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace mfin
