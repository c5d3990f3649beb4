#pragma once

#include <stdexcept>
#include <string>

namespace phaseret {

/// Base of every data-condition error raised by the library. Programming
/// errors (broken internal invariants) use std::logic_error instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Energy found outside a declared coefficient window.
class SupportViolation : public Error {
 public:
  SupportViolation(int index, double magnitude, double threshold)
      : Error("coefficient at index " + std::to_string(index) + " has magnitude " +
              std::to_string(magnitude) + " outside the declared support (threshold " +
              std::to_string(threshold) + ")"),
        index_(index),
        magnitude_(magnitude) {}

  int index() const noexcept { return index_; }
  double magnitude() const noexcept { return magnitude_; }

 private:
  int index_;
  double magnitude_;
};

/// Both unknown vectors vanish while the target does not.
class DegenerateTriangle : public Error {
 public:
  using Error::Error;
};

class EmptySupport : public Error {
 public:
  EmptySupport() : Error("all coefficient moduli vanish; nothing to anchor on") {}
};

/// 2D corner anchors a(N,N) / a(-N,-N) vanish.
class AnchorFailure : public Error {
 public:
  using Error::Error;
};

/// Brute-force search space exceeds the configured budget.
class TooLarge : public Error {
 public:
  using Error::Error;
};

/// Malformed instance, spectrum or report file.
class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace phaseret
