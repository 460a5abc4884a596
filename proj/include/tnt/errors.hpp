#pragma once

#include <stdexcept>
#include <string>

namespace tnt {

// Bad input data: unreadable/malformed files, invariant violations in
// user-supplied datasets, dimension mismatches at predict time.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Structurally invalid model: cycles, dangling node refs, schema violations.
class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tnt
