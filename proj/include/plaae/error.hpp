#pragma once

#include <stdexcept>
#include <string>

namespace plaae {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// config/io -> exit 2, validation/metric -> exit 1.
enum class ErrorKind {
  shape,    // tensor/weight dimension disagreement
  config,   // invalid or inconsistent configuration
  length,   // input too short for the requested operation
  numeric,  // non-finite values, zero-norm guards
  io,       // file parsing, missing files
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace plaae
