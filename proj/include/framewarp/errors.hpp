#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace framewarp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input; `location()` names the row/line when known (1-based, 0 = unknown).
class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what, std::size_t location = 0)
      : Error(location ? what + " (at row " + std::to_string(location) + ")" : what),
        location_(location) {}
  std::size_t location() const noexcept { return location_; }

 private:
  std::size_t location_;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A structural invariant (tiling, ordering, label range, ...) does not hold.
class InvariantError : public Error {
 public:
  using Error::Error;
};

/// Not enough data to satisfy the request, e.g. fewer keypoints than words.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace framewarp
