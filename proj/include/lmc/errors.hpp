#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace lmc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller supplied an argument outside an operation's domain.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. `line()` is 1-based; 0 when the file as a whole is bad.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Inconsistent experiment configuration (bad keys, overlapping regions, empty A or B).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: singular systems, blow-ups, degenerate geometry.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure tied to a specific point of the cloud.
class PointError : public NumericalError {
 public:
  PointError(const std::string& what, std::int64_t point)
      : NumericalError(what + " (point " + std::to_string(point) + ")"), point_(point) {}
  std::int64_t point() const noexcept { return point_; }

 private:
  std::int64_t point_;
};

class DegenerateNeighborhood : public PointError {
 public:
  using PointError::PointError;
};

class AssemblyError : public PointError {
 public:
  using PointError::PointError;
};

class SolverError : public PointError {
 public:
  using PointError::PointError;
};

class BandwidthError : public PointError {
 public:
  using PointError::PointError;
};

}  // namespace lmc
