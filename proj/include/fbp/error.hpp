#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace fbp {

// Root of every error the library throws. Subclasses name the failure class
// so callers (and tests) can discriminate without parsing messages.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error { using Error::Error; };
class BoundsError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class SpecError : public Error { using Error::Error; };
class StateError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class CorruptionError : public Error { using Error::Error; };
class VersionError : public Error { using Error::Error; };
class ValidationError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };

// Malformed file content; carries the byte offset where decoding failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

// Conjugate gradients stopped at the iteration cap.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Pearson correlation with a zero-variance argument.
class UndefinedCorrelationError : public Error { using Error::Error; };

}  // namespace fbp
