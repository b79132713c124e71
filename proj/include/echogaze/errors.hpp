#pragma once

#include <stdexcept>
#include <string>

namespace echogaze {

// Invalid user-supplied configuration (bad band edges, bad params, ...).
// CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Caller broke an API precondition (length mismatch, empty input, ...).
class ContractError : public std::logic_error {
public:
    explicit ContractError(const std::string& msg) : std::logic_error(msg) {}
};

// File / stream problems: missing files, truncation, hash mismatch.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace echogaze
