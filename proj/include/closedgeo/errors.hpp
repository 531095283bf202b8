#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace closedgeo {

enum class ErrorKind { input, domain, resolution, numeric, consistency };

std::string_view to_string(ErrorKind kind);

/// Base of every error raised by the library. The kind drives the CLI exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::input, what) {}
};

/// Points farther apart than the safe connection radius.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorKind::domain, what) {}
};

/// Polygon too coarse for the manifold's connection radius.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& what, int min_vertices)
      : Error(ErrorKind::resolution, what), min_vertices_(min_vertices) {}
  int min_vertices() const noexcept { return min_vertices_; }

 private:
  int min_vertices_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

/// Two independent computations of the same quantity disagree. `details` is a JSON document.
class ConsistencyError : public Error {
 public:
  ConsistencyError(const std::string& what, std::string details)
      : Error(ErrorKind::consistency, what), details_(std::move(details)) {}
  const std::string& details() const noexcept { return details_; }

 private:
  std::string details_;
};

}  // namespace closedgeo
