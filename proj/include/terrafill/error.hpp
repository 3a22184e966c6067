// SPDX-License-Identifier: Apache-2.0
//
// Exception hierarchy shared by every terrafill module.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace terrafill {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Malformed input. `line` is 1-based for text formats, `byte_offset` is set
/// for binary payloads; whichever does not apply is zero.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::uint64_t byte_offset = 0)
      : Error(what), line_(line), byte_offset_(byte_offset) {}

  std::size_t line() const noexcept { return line_; }
  std::uint64_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t line_;
  std::uint64_t byte_offset_;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class EmptyCloud : public Error {
 public:
  using Error::Error;
};

class DegenerateFootprint : public Error {
 public:
  using Error::Error;
};

class SingularSystem : public Error {
 public:
  using Error::Error;
};

class EmptyProjection : public Error {
 public:
  using Error::Error;
};

class NoValidSourcePatch : public Error {
 public:
  using Error::Error;
};

class UncoveredHoleCell : public Error {
 public:
  using Error::Error;
};

class SolverDivergence : public Error {
 public:
  using Error::Error;
};

class DegenerateTangent : public Error {
 public:
  using Error::Error;
};

class HoleCoverageFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace terrafill
