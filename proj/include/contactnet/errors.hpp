#pragma once

#include <stdexcept>
#include <string>

namespace contactnet {

/// Bad command line or config file. The CLI maps this to exit code 2.
struct usage_error : std::runtime_error {
    explicit usage_error(const std::string& what) : std::runtime_error(what) {}
};

/// A configured cap was exhausted (rejection rounds, state space size, ...).
/// The CLI maps this to exit code 4. Precondition violations on in-range
/// inputs throw std::invalid_argument instead and map to exit code 3.
struct resource_limit_error : std::runtime_error {
    explicit resource_limit_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace contactnet
