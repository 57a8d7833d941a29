#pragma once

#include <stdexcept>
#include <string>

namespace dialrank {

// File/content problems: parse failures, invariant violations, misaligned
// inputs. The CLI maps these to exit code 2.
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values where the pipeline requires finite ones (NaN loss and
// friends). Exit code 3.
class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad configuration or command usage. Exit code 1.
class usage_error : public std::runtime_error {
 public:
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace dialrank
