#pragma once

#include <stdexcept>
#include <string>

namespace pfb {

// Invalid configuration value. `field()` names the offending dotted path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Argument outside an operation's domain (angle out of range, length mismatch).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Malformed persisted document. `line()` is 1-based, 0 when not line oriented.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

// Runtime failure carrying a stable machine-readable code ("no_snapshot", ...).
class RuntimeError : public std::runtime_error {
public:
    RuntimeError(std::string code, const std::string& what)
        : std::runtime_error(what), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace pfb
