#pragma once

#include <stdexcept>
#include <string>

namespace incmi {

// Bad user input: malformed files, out-of-range categories, invalid options.
class input_error : public std::runtime_error {
public:
  explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure: singular kernels, non-convergence, inconsistent state.
class numeric_error : public std::runtime_error {
public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace incmi
