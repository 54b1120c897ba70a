#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace flexpool {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iteration or conditioning limits hit; distinct from a proven infeasible/unbounded LP.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class EmptyPolytope : public Error {
 public:
  using Error::Error;
};

class UnboundedError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class FamilyMismatch : public Error {
 public:
  using Error::Error;
};

class NegativeBeta : public Error {
 public:
  using Error::Error;
};

class BetaOutOfRange : public Error {
 public:
  using Error::Error;
};

class EmptyIntersection : public Error {
 public:
  using Error::Error;
};

class NonConvexInput : public Error {
 public:
  using Error::Error;
};

class EmptyRemainder : public Error {
 public:
  using Error::Error;
};

/// Aggregate target outside the aggregate zonotope. `facet` is the index of the
/// first violated facet-normal direction.
class InfeasibleTarget : public Error {
 public:
  InfeasibleTarget(const std::string& what, std::size_t facet)
      : Error(what), facet_(facet) {}
  std::size_t facet() const noexcept { return facet_; }

 private:
  std::size_t facet_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Bad configuration or file content outside a specific parser line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace flexpool
