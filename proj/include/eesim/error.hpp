#pragma once

#include <stdexcept>
#include <string>

namespace eesim {

// Bad configuration or arguments. The CLI maps this to exit status 1.
struct ValidationError : std::runtime_error {
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data. The CLI maps this to exit status 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace eesim
