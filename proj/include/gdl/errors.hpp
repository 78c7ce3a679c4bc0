#pragma once

#include <stdexcept>
#include <string>

namespace gdl {

// Precondition on argument shapes or ranges was violated by the caller.
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Posterior extraction asked to condition on a token of probability zero.
class ConditioningError : public std::domain_error {
public:
    explicit ConditioningError(const std::string &what, std::size_t position = 0)
        : std::domain_error(what), position_(position) {}
    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

// Loss became NaN/Inf during training.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad configuration file, flag, or malformed input artifact.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gdl
