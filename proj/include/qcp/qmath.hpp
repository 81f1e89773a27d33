#pragma once

// Dense complex linear algebra over multi-qubit registers.
//
// Qubit ordering: in a register of q qubits, qubit 0 is the leftmost tensor
// factor and the most significant bit of a basis index. So |b_0 b_1 ... b_{q-1}>
// has index sum_j b_j 2^(q-1-j), and tensor(a, b) places a's qubits first.

#include <cstdint>
#include <span>
#include <vector>

#include "qcp/common.hpp"
#include "qcp/rng.hpp"

namespace qcp {

/// Unit vector of length 2^q.
class PureState {
 public:
  explicit PureState(Vector amplitudes);
  static PureState basis(int qubits, std::uint64_t index);

  const Vector& amplitudes() const noexcept { return amplitudes_; }
  int qubits() const noexcept { return qubits_; }
  Eigen::Index dimension() const noexcept { return amplitudes_.size(); }

 private:
  Vector amplitudes_;
  int qubits_ = 0;
};

/// Hermitian, unit-trace, positive semidefinite 2^q x 2^q matrix.
class DensityOperator {
 public:
  explicit DensityOperator(Matrix matrix);
  static DensityOperator from_pure(const PureState& state);
  static DensityOperator maximally_mixed(int qubits);
  /// Skips the eigenvalue check; shape, trace and hermiticity are still
  /// verified. For results of maps already known to be CPTP.
  static DensityOperator assume_positive(Matrix matrix);

  const Matrix& matrix() const noexcept { return matrix_; }
  int qubits() const noexcept { return qubits_; }
  Eigen::Index dimension() const noexcept { return matrix_.rows(); }

 private:
  struct Unchecked {};
  DensityOperator(Matrix matrix, Unchecked);
  Matrix matrix_;
  int qubits_ = 0;
};

/// Positive semidefinite operator with trace in [0, 1].
class SubnormalizedOperator {
 public:
  explicit SubnormalizedOperator(Matrix matrix);
  const Matrix& matrix() const noexcept { return matrix_; }
  double weight() const noexcept { return weight_; }

 private:
  Matrix matrix_;
  double weight_ = 0.0;
};

/// V with V^dagger V = I, mapping 2^in qubits into 2^out qubits (out >= in).
class Isometry {
 public:
  explicit Isometry(Matrix matrix);
  const Matrix& matrix() const noexcept { return matrix_; }
  int input_qubits() const noexcept { return in_qubits_; }
  int output_qubits() const noexcept { return out_qubits_; }

 private:
  Matrix matrix_;
  int in_qubits_ = 0;
  int out_qubits_ = 0;
};

/// Completely positive map given by Kraus operators of a common shape.
class KrausChannel {
 public:
  enum class Kind { kTracePreserving, kTraceNonIncreasing };

  KrausChannel(std::vector<Matrix> kraus_ops, Kind kind = Kind::kTracePreserving);

  static KrausChannel identity(int qubits);
  /// rho -> Tr(rho) I/d.
  static KrausChannel fully_depolarizing(int qubits);
  static KrausChannel from_isometry(const Isometry& v);

  const std::vector<Matrix>& kraus_ops() const noexcept { return ops_; }
  Kind kind() const noexcept { return kind_; }
  Eigen::Index input_dimension() const noexcept { return ops_.front().cols(); }
  Eigen::Index output_dimension() const noexcept { return ops_.front().rows(); }

 private:
  std::vector<Matrix> ops_;
  Kind kind_;
};

// ---- tensor structure -------------------------------------------------------

Matrix kron(const Matrix& a, const Matrix& b);
Vector kron(const Vector& a, const Vector& b);
PureState tensor(const PureState& a, const PureState& b);
DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);
Matrix tensor(const Matrix& a, const Matrix& b);

/// Reduced operator on the qubits in `keep` (kept in ascending order).
/// An empty `keep` yields the 1x1 trace.
Matrix partial_trace(const Matrix& op, int qubits, std::span<const int> keep);
DensityOperator partial_trace(const DensityOperator& op, std::span<const int> keep);

// ---- distances --------------------------------------------------------------

/// Schatten-1 norm via singular values.
double trace_norm(const Matrix& x);
/// (1/2) ||X - Y||_1.
double trace_distance(const Matrix& x, const Matrix& y);
double trace_distance(const DensityOperator& x, const DensityOperator& y);
/// Eigenvalue route, valid when X - Y is Hermitian.
double trace_distance_hermitian(const Matrix& x, const Matrix& y);

// ---- maps and measurement ---------------------------------------------------

PureState apply_isometry(const Isometry& v, const PureState& state);
DensityOperator apply_isometry(const Isometry& v, const DensityOperator& state);

/// Requires a trace-preserving channel.
DensityOperator apply_channel(const KrausChannel& channel, const DensityOperator& state);
/// Any channel; the result carries its trace as weight.
SubnormalizedOperator apply_channel_subnormalized(const KrausChannel& channel,
                                                  const DensityOperator& state);

struct MeasurementResult {
  std::size_t outcome;
  DensityOperator post_state;
  double probability;
};

/// Samples outcome i with probability Tr(P_i rho) and returns P_i rho P_i
/// normalized. Outcomes with probability below 1e-12 are never returned.
MeasurementResult measure_projective(const DensityOperator& state, std::span<const Matrix> projectors,
                                     Rng& rng);

// ---- predicates -------------------------------------------------------------

bool is_unitary(const Matrix& u, double tol = kStructuralTol);
bool is_hermitian(const Matrix& m, double tol = kStructuralTol);
bool is_projector(const Matrix& p, double tol = kStructuralTol);

// ---- random objects (test and experiment fixtures) --------------------------

/// Standard complex Gaussian matrix with i.i.d. N(0,1/2)+iN(0,1/2) entries.
Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng);
/// Haar-random unitary via QR of a Ginibre matrix with the phase fix.
Matrix haar_unitary(Eigen::Index dim, Rng& rng);
PureState random_pure_state(int qubits, Rng& rng);
/// Random density operator of the given rank (rank 0 means full rank).
DensityOperator random_density(int qubits, Rng& rng, int rank = 0);
/// Random trace-preserving channel with `num_kraus` operators.
KrausChannel random_channel(int in_qubits, int out_qubits, int num_kraus, Rng& rng);

}  // namespace qcp
