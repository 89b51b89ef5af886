#pragma once

#include <stdexcept>
#include <string>

namespace treemax {

// Invalid argument values: k < 2, p < 1, negative radius, base mismatch, ...
struct parameter_error : std::invalid_argument {
    explicit parameter_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Structurally valid input on which the requested operation is undefined
// (log of zero, subtracting the larger magnitude, power of zero with
// nonpositive exponent).
struct domain_error : std::invalid_argument {
    explicit domain_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// An operation that would exceed an explicit enumeration or memory budget.
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Asked for something a tail-extended (infinitely supported) function cannot
// provide exactly, e.g. a full distribution function.
struct unsupported_tail_error : parameter_error {
    explicit unsupported_tail_error(const std::string& msg) : parameter_error(msg) {}
};

struct io_error : std::runtime_error {
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace treemax
