#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace corefine {

// Input rejected (functor term or coalgebra body). Carries a 1-based line
// number when the failure is attributable to one. CLI exit code 1.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::string msg, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + std::move(msg)
                                : std::move(msg)),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Violation of the worker protocol or of transport framing (bad tag, UPD for
// an unknown state, checksum mismatch, connection failure...). CLI exit code 2.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Checked 64-bit monoid arithmetic overflowed. CLI exit code 3.
class OverflowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace corefine
