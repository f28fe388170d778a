#pragma once

#include <stdexcept>
#include <string>

namespace sfda {

// Bad or missing configuration (CLI maps this to exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Missing or corrupt input file: dataset, checkpoint (CLI exit code 3).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite value detected during optimization (CLI exit code 4).
struct NumericError : std::runtime_error {
    long step;
    NumericError(const std::string& msg, long step_index)
        : std::runtime_error(msg), step(step_index) {}
};

} // namespace sfda
