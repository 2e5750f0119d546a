#pragma once

#include <stdexcept>
#include <string>

namespace spincoh {

/// Bad user-facing input: config keys, file contents, out-of-range parameters
/// read at a boundary. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A numerical procedure that did not reach its stopping criterion.
class ConvergenceError : public std::runtime_error {
 public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace spincoh
