#pragma once

#include <stdexcept>
#include <string>

namespace hrtfprint {

// Malformed or inconsistent input data (corpus files, feature stores, grids).
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// A caller violated an operation's precondition (bad parameters).
class UsageError : public std::invalid_argument {
 public:
  explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace hrtfprint
