#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace physec {

// Invalid configuration value. field() names the offending key.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& what)
        : std::invalid_argument(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// A precondition on an operation's arguments was violated
// (dimension mismatch, non-finite data, asymmetric matrix, ...).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed input file. line() is 1-based, 0 when not line oriented.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// EM could not produce a usable model.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A mixture component ended up with no responsibility mass.
class DegenerateComponentError : public FitError {
public:
    DegenerateComponentError(std::size_t component, double mass)
        : FitError("component " + std::to_string(component) +
                   " has degenerate responsibility mass " + std::to_string(mass)),
          component_(component) {}

    std::size_t component() const noexcept { return component_; }

private:
    std::size_t component_;
};

// Model refresh failed for a given block; the authenticator state is unchanged.
class BlockUpdateError : public FitError {
public:
    BlockUpdateError(std::size_t block, const std::string& cause)
        : FitError("block " + std::to_string(block) + ": " + cause), block_(block) {}

    std::size_t block() const noexcept { return block_; }

private:
    std::size_t block_;
};

}  // namespace physec
