#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace utp {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration: flow graph, partition spec, depth mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// API misuse: out-of-range index, extent mismatch, bad shapes.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Unknown operation name.
class RegistryError : public Error {
 public:
  using Error::Error;
};

// Broken runtime invariant. Never expected in a correct run.
class InternalError : public Error {
 public:
  using Error::Error;
};

class DeadlockError : public Error {
 public:
  using Error::Error;
};

// Kernel failure; `pivot` is the row index of the offending pivot
// relative to whatever frame the thrower knows about.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, std::size_t pivot)
      : Error(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

}  // namespace utp
