#pragma once
#include <stdexcept>
#include <string>

namespace wavesrc {

// Invalid user-supplied configuration (bad grids, negative noise, unknown keys, ...).
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Runtime numerical failure (solver breakdown, NaN iterates, model degeneracies).
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace wavesrc
