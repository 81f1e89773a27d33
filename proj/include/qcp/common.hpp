#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qcp {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Tolerance for structural identities (unitarity, normalization, idempotence).
inline constexpr double kStructuralTol = 1e-9;
/// Tolerance for identities composed from several numerical steps.
inline constexpr double kComposedTol = 1e-8;

/// Default hard cap on the total number of qubits in any dense object.
inline constexpr int kDefaultQubitCap = 12;

/// Raised when operand shapes do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an object would exceed the configured qubit cap or an
/// enumeration limit.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Raised when a value violates a documented invariant (non-unitary input,
/// probabilities that do not sum to one, ...).
class InvariantError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised on misuse of single-owner objects, e.g. evaluating a consumed program.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Current qubit cap. Defaults to kDefaultQubitCap.
int qubit_cap() noexcept;
/// Overrides the qubit cap for the whole process. Intended for configuration
/// at startup, not for toggling while work is in flight.
void set_qubit_cap(int qubits);
/// Throws CapacityError if `qubits` exceeds the cap.
void check_qubit_cap(int qubits, const char* what);

/// Returns log2(dim) when dim is a power of two, -1 otherwise.
int qubits_for_dimension(Eigen::Index dim) noexcept;

/// A classical bit string of fixed length, stored little-endian in an
/// unsigned integer: bit i of `value()` is the i-th least significant bit.
/// Strings are compared by value and length.
class BitString {
 public:
  static constexpr int kMaxLength = 30;

  BitString() = default;
  BitString(std::uint32_t value, int length);

  std::uint32_t value() const noexcept { return value_; }
  int length() const noexcept { return length_; }
  std::uint32_t space_size() const noexcept { return std::uint32_t{1} << length_; }

  std::string to_string() const;

  friend bool operator==(const BitString&, const BitString&) = default;

 private:
  std::uint32_t value_ = 0;
  int length_ = 0;
};

}  // namespace qcp
