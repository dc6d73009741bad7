#pragma once

#include <stdexcept>
#include <string>

namespace lexrag {

/// Base class for all errors raised by lexrag. `kind()` is a short stable
/// identifier used in machine-readable error output.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class TextError : public Error {
public:
    explicit TextError(const std::string& message) : Error("text", message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error("config", message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error("io", message) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& message) : Error("format", message) {}
};

class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& message) : Error("provider", message) {}
};

} // namespace lexrag
