#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace groupmax {

/// Operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An architecture constraint is violated (e.g. a width not divisible by the
/// group size).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An API was driven in an order or state it does not support.
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Training or evaluation produced a non-finite quantity.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A text file could not be parsed. line() is 1-based, 0 when the file is empty.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Cut enumeration would exceed the configured cap.
class CutOverflowError : public std::runtime_error {
 public:
  CutOverflowError(double predicted, double formula, std::uint64_t cap)
      : std::runtime_error("cut enumeration needs " + format(predicted) +
                           " cuts (closed form M*G^(K(q-1)) = " + format(formula) +
                           "), cap is " + std::to_string(cap)),
        predicted_(predicted),
        formula_(formula) {}
  double predicted() const { return predicted_; }
  double formula() const { return formula_; }

 private:
  static std::string format(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
  }
  double predicted_;
  double formula_;
};

}  // namespace groupmax
