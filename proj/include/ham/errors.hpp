// Copyright 2026 The HAM Authors. Apache 2.0 License.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ham {

// Shape or length disagreement between arguments.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A non-finite value appeared; `position` is the token index where it was seen.
class NumericError : public std::runtime_error {
 public:
  NumericError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " (position " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

// Configuration or precondition violation that is not a shape problem.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_dims(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

}  // namespace detail
}  // namespace ham
