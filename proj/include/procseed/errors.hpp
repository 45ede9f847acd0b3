#pragma once

#include <stdexcept>
#include <string>

namespace procseed {

// Raised for invalid configs, malformed files, and contract violations
// detected at call boundaries. The CLI maps this to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when training produces a non-finite loss. The CLI maps this to
// exit code 3 after persisting the last good checkpoint.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// File and directory level failures (missing file, bad magic, short read).
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace procseed
