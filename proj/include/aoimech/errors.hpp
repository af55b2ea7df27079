#pragma once

#include <stdexcept>
#include <string>

namespace aoimech {

// Bad configuration or out-of-contract input. CLI maps this to exit code 1.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// A numerical routine failed to converge or was asked for something outside
// the reachable range. CLI maps this to exit code 2.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

} // namespace aoimech
