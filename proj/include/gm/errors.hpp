#pragma once

#include <stdexcept>
#include <string>

namespace gm {

// Bad user input: malformed config, invalid parameters, unreadable files.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A numerical stage failed (non-convergence, cap exceeded, degenerate fit).
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace gm
