#include "qcp/qmath.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "qcp/kernels/kernels.hpp"

namespace qcp {

namespace {

std::atomic<int> g_qubit_cap{kDefaultQubitCap};

int require_qubits(Eigen::Index dim, const char* what) {
  const int q = qubits_for_dimension(dim);
  if (q < 0) throw DimensionError(std::string(what) + ": dimension is not a power of two");
  check_qubit_cap(q, what);
  return q;
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw DimensionError(std::string(what) + ": operator is not square");
}

}  // namespace

// ---- common -----------------------------------------------------------------

int qubit_cap() noexcept { return g_qubit_cap.load(std::memory_order_relaxed); }

void set_qubit_cap(int qubits) {
  if (qubits < 1 || qubits > 16) throw std::invalid_argument("qubit cap must lie in [1, 16]");
  g_qubit_cap.store(qubits, std::memory_order_relaxed);
}

void check_qubit_cap(int qubits, const char* what) {
  if (qubits > qubit_cap()) {
    throw CapacityError(std::string(what) + ": " + std::to_string(qubits) +
                        " qubits exceeds the cap of " + std::to_string(qubit_cap()));
  }
}

int qubits_for_dimension(Eigen::Index dim) noexcept {
  if (dim <= 0 || (dim & (dim - 1)) != 0) return -1;
  int q = 0;
  while ((Eigen::Index{1} << q) < dim) ++q;
  return q;
}

BitString::BitString(std::uint32_t value, int length) : value_(value), length_(length) {
  if (length < 0 || length > kMaxLength) throw std::invalid_argument("BitString: bad length");
  if (length < 32 && (value >> length) != 0) {
    throw std::invalid_argument("BitString: value does not fit in length");
  }
}

std::string BitString::to_string() const {
  std::string s(static_cast<std::size_t>(length_), '0');
  for (int i = 0; i < length_; ++i) {
    if ((value_ >> (length_ - 1 - i)) & 1U) s[static_cast<std::size_t>(i)] = '1';
  }
  return s;
}

// ---- state types ------------------------------------------------------------

PureState::PureState(Vector amplitudes) : amplitudes_(std::move(amplitudes)) {
  qubits_ = require_qubits(amplitudes_.size(), "PureState");
  const double norm2 = kernels::norm_sq(kernels::view(amplitudes_));
  if (std::abs(norm2 - 1.0) > kStructuralTol) {
    throw InvariantError("PureState: squared norm " + std::to_string(norm2) + " is not 1");
  }
}

PureState PureState::basis(int qubits, std::uint64_t index) {
  check_qubit_cap(qubits, "PureState::basis");
  const Eigen::Index dim = Eigen::Index{1} << qubits;
  if (static_cast<Eigen::Index>(index) >= dim) throw std::out_of_range("basis index out of range");
  Vector v = Vector::Zero(dim);
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return PureState(std::move(v));
}

DensityOperator::DensityOperator(Matrix matrix, Unchecked) : matrix_(std::move(matrix)) {
  require_square(matrix_, "DensityOperator");
  qubits_ = require_qubits(matrix_.rows(), "DensityOperator");
  if (!is_hermitian(matrix_)) throw InvariantError("DensityOperator: not Hermitian");
  const double tr = matrix_.trace().real();
  if (std::abs(tr - 1.0) > kStructuralTol) {
    throw InvariantError("DensityOperator: trace " + std::to_string(tr) + " is not 1");
  }
}

DensityOperator::DensityOperator(Matrix matrix) : DensityOperator(std::move(matrix), Unchecked{}) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kStructuralTol) {
    throw InvariantError("DensityOperator: negative eigenvalue");
  }
}

DensityOperator DensityOperator::from_pure(const PureState& state) {
  const Vector& a = state.amplitudes();
  return DensityOperator(a * a.adjoint(), Unchecked{});
}

DensityOperator DensityOperator::maximally_mixed(int qubits) {
  check_qubit_cap(qubits, "maximally_mixed");
  const Eigen::Index dim = Eigen::Index{1} << qubits;
  return DensityOperator(Matrix::Identity(dim, dim) / static_cast<double>(dim), Unchecked{});
}

DensityOperator DensityOperator::assume_positive(Matrix matrix) {
  return DensityOperator(std::move(matrix), Unchecked{});
}

SubnormalizedOperator::SubnormalizedOperator(Matrix matrix) : matrix_(std::move(matrix)) {
  require_square(matrix_, "SubnormalizedOperator");
  if (!is_hermitian(matrix_)) throw InvariantError("SubnormalizedOperator: not Hermitian");
  weight_ = matrix_.trace().real();
  if (weight_ < -kStructuralTol || weight_ > 1.0 + kStructuralTol) {
    throw InvariantError("SubnormalizedOperator: trace outside [0, 1]");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(matrix_, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kStructuralTol) {
    throw InvariantError("SubnormalizedOperator: negative eigenvalue");
  }
}

Isometry::Isometry(Matrix matrix) : matrix_(std::move(matrix)) {
  in_qubits_ = require_qubits(matrix_.cols(), "Isometry input");
  out_qubits_ = require_qubits(matrix_.rows(), "Isometry output");
  if (out_qubits_ < in_qubits_) throw DimensionError("Isometry: output smaller than input");
  const Matrix gram = matrix_.adjoint() * matrix_;
  if (!gram.isIdentity(kStructuralTol)) throw InvariantError("Isometry: V^dagger V != I");
}

KrausChannel::KrausChannel(std::vector<Matrix> kraus_ops, Kind kind)
    : ops_(std::move(kraus_ops)), kind_(kind) {
  if (ops_.empty()) throw std::invalid_argument("KrausChannel: no Kraus operators");
  const Eigen::Index rows = ops_.front().rows();
  const Eigen::Index cols = ops_.front().cols();
  Matrix sum = Matrix::Zero(cols, cols);
  for (const Matrix& k : ops_) {
    if (k.rows() != rows || k.cols() != cols) throw DimensionError("KrausChannel: mixed shapes");
    sum.noalias() += k.adjoint() * k;
  }
  if (kind_ == Kind::kTracePreserving) {
    if (!sum.isIdentity(kStructuralTol)) throw InvariantError("KrausChannel: sum K^dagger K != I");
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sum, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().maxCoeff() > 1.0 + kStructuralTol) {
      throw InvariantError("KrausChannel: sum K^dagger K exceeds I");
    }
  }
}

KrausChannel KrausChannel::identity(int qubits) {
  check_qubit_cap(qubits, "KrausChannel::identity");
  const Eigen::Index dim = Eigen::Index{1} << qubits;
  return KrausChannel({Matrix::Identity(dim, dim)});
}

KrausChannel KrausChannel::fully_depolarizing(int qubits) {
  check_qubit_cap(qubits, "KrausChannel::fully_depolarizing");
  const Eigen::Index dim = Eigen::Index{1} << qubits;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<Matrix> ops;
  ops.reserve(static_cast<std::size_t>(dim * dim));
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = 0; j < dim; ++j) {
      Matrix k = Matrix::Zero(dim, dim);
      k(i, j) = scale;
      ops.push_back(std::move(k));
    }
  }
  return KrausChannel(std::move(ops));
}

KrausChannel KrausChannel::from_isometry(const Isometry& v) { return KrausChannel({v.matrix()}); }

// ---- tensor structure -------------------------------------------------------

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

PureState tensor(const PureState& a, const PureState& b) {
  check_qubit_cap(a.qubits() + b.qubits(), "tensor");
  return PureState(kron(a.amplitudes(), b.amplitudes()));
}

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
  check_qubit_cap(a.qubits() + b.qubits(), "tensor");
  return DensityOperator::assume_positive(kron(a.matrix(), b.matrix()));
}

Matrix tensor(const Matrix& a, const Matrix& b) {
  const int qa = qubits_for_dimension(a.rows());
  const int qb = qubits_for_dimension(b.rows());
  if (qa < 0 || qb < 0 || qubits_for_dimension(a.cols()) < 0 || qubits_for_dimension(b.cols()) < 0) {
    throw DimensionError("tensor: dimensions must be powers of two");
  }
  check_qubit_cap(std::max(qa + qb, qubits_for_dimension(a.cols() * b.cols())), "tensor");
  return kron(a, b);
}

Matrix partial_trace(const Matrix& op, int qubits, std::span<const int> keep) {
  require_square(op, "partial_trace");
  if (op.rows() != (Eigen::Index{1} << qubits)) throw DimensionError("partial_trace: size mismatch");
  std::vector<int> kept(keep.begin(), keep.end());
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  for (int k : kept) {
    if (k < 0 || k >= qubits) throw DimensionError("partial_trace: qubit index out of range");
  }
  std::vector<int> traced;
  for (int j = 0; j < qubits; ++j) {
    if (!std::binary_search(kept.begin(), kept.end(), j)) traced.push_back(j);
  }
  // Scatter an index over a subset of qubit positions into a full basis index.
  auto scatter = [qubits](std::uint64_t local, const std::vector<int>& positions) {
    std::uint64_t full = 0;
    const auto n = positions.size();
    for (std::size_t i = 0; i < n; ++i) {
      if ((local >> (n - 1 - i)) & 1U) full |= std::uint64_t{1} << (qubits - 1 - positions[i]);
    }
    return full;
  };
  const std::uint64_t keep_dim = std::uint64_t{1} << kept.size();
  const std::uint64_t trace_dim = std::uint64_t{1} << traced.size();
  std::vector<std::uint64_t> keep_idx(keep_dim), trace_idx(trace_dim);
  for (std::uint64_t i = 0; i < keep_dim; ++i) keep_idx[i] = scatter(i, kept);
  for (std::uint64_t t = 0; t < trace_dim; ++t) trace_idx[t] = scatter(t, traced);

  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(keep_dim), static_cast<Eigen::Index>(keep_dim));
  for (std::uint64_t i = 0; i < keep_dim; ++i) {
    for (std::uint64_t j = 0; j < keep_dim; ++j) {
      Complex acc{};
      for (std::uint64_t t = 0; t < trace_dim; ++t) {
        acc += op(static_cast<Eigen::Index>(keep_idx[i] | trace_idx[t]),
                  static_cast<Eigen::Index>(keep_idx[j] | trace_idx[t]));
      }
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = acc;
    }
  }
  return out;
}

DensityOperator partial_trace(const DensityOperator& op, std::span<const int> keep) {
  return DensityOperator::assume_positive(partial_trace(op.matrix(), op.qubits(), keep));
}

// ---- distances --------------------------------------------------------------

double trace_norm(const Matrix& x) {
  if (x.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(x);
  return svd.singularValues().sum();
}

double trace_distance(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimensionError("trace_distance: shapes differ");
  require_square(x, "trace_distance");
  return 0.5 * trace_norm(x - y);
}

double trace_distance(const DensityOperator& x, const DensityOperator& y) {
  return trace_distance(x.matrix(), y.matrix());
}

double trace_distance_hermitian(const Matrix& x, const Matrix& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimensionError("trace_distance: shapes differ");
  require_square(x, "trace_distance_hermitian");
  const Matrix diff = x - y;
  if (!is_hermitian(diff, kComposedTol)) throw InvariantError("trace_distance_hermitian: X - Y not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(diff, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

// ---- maps and measurement ---------------------------------------------------

PureState apply_isometry(const Isometry& v, const PureState& state) {
  if (v.matrix().cols() != state.dimension()) throw DimensionError("apply_isometry: dimension mismatch");
  Vector out(v.matrix().rows());
  kernels::matvec(v.matrix(), kernels::view(state.amplitudes()), kernels::view(out));
  return PureState(std::move(out));
}

DensityOperator apply_isometry(const Isometry& v, const DensityOperator& state) {
  if (v.matrix().cols() != state.dimension()) throw DimensionError("apply_isometry: dimension mismatch");
  return DensityOperator::assume_positive(v.matrix() * state.matrix() * v.matrix().adjoint());
}

namespace {

Matrix sum_kraus(const KrausChannel& channel, const Matrix& rho) {
  if (channel.input_dimension() != rho.rows()) throw DimensionError("apply_channel: dimension mismatch");
  const Eigen::Index out = channel.output_dimension();
  Matrix acc = Matrix::Zero(out, out);
  for (const Matrix& k : channel.kraus_ops()) acc.noalias() += k * rho * k.adjoint();
  return acc;
}

}  // namespace

DensityOperator apply_channel(const KrausChannel& channel, const DensityOperator& state) {
  if (channel.kind() != KrausChannel::Kind::kTracePreserving) {
    throw InvariantError("apply_channel: channel is not trace preserving");
  }
  return DensityOperator::assume_positive(sum_kraus(channel, state.matrix()));
}

SubnormalizedOperator apply_channel_subnormalized(const KrausChannel& channel,
                                                  const DensityOperator& state) {
  return SubnormalizedOperator(sum_kraus(channel, state.matrix()));
}

MeasurementResult measure_projective(const DensityOperator& state, std::span<const Matrix> projectors,
                                     Rng& rng) {
  if (projectors.empty()) throw std::invalid_argument("measure_projective: no projectors");
  const Eigen::Index dim = state.dimension();
  Matrix total = Matrix::Zero(dim, dim);
  for (const Matrix& p : projectors) {
    if (p.rows() != dim || p.cols() != dim) throw DimensionError("measure_projective: projector shape");
    if (!is_projector(p)) throw InvariantError("measure_projective: operator is not a projector");
    total += p;
  }
  if (!total.isIdentity(kStructuralTol)) throw InvariantError("measure_projective: projectors do not sum to I");

  std::vector<double> probs(projectors.size());
  for (std::size_t i = 0; i < projectors.size(); ++i) {
    const double pr = (projectors[i] * state.matrix()).trace().real();
    probs[i] = pr < 1e-12 ? 0.0 : pr;
  }
  double mass = 0.0;
  for (double pr : probs) mass += pr;
  double u = rng.uniform01() * mass;
  std::size_t chosen = projectors.size();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] == 0.0) continue;
    chosen = i;
    if (u < probs[i]) break;
    u -= probs[i];
  }
  const Matrix& p = projectors[chosen];
  Matrix post = p * state.matrix() * p / probs[chosen];
  return {chosen, DensityOperator::assume_positive(std::move(post)), probs[chosen]};
}

// ---- predicates -------------------------------------------------------------

bool is_unitary(const Matrix& u, double tol) {
  if (u.rows() != u.cols()) return false;
  return (u.adjoint() * u).isIdentity(tol);
}

bool is_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol || m.size() == 0;
}

bool is_projector(const Matrix& p, double tol) {
  if (!is_hermitian(p, tol)) return false;
  return (p * p - p).cwiseAbs().maxCoeff() <= tol;
}

// ---- random objects ---------------------------------------------------------

Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) {
      // Box-Muller: radius sqrt(-ln u) gives E|z|^2 = 1.
      const double u1 = 1.0 - rng.uniform01();
      const double u2 = rng.uniform01();
      const double r = std::sqrt(-std::log(u1));
      const double theta = 2.0 * std::numbers::pi * u2;
      g(i, j) = Complex(r * std::cos(theta), r * std::sin(theta));
    }
  }
  return g;
}

Matrix haar_unitary(Eigen::Index dim, Rng& rng) {
  const Matrix g = ginibre(dim, dim, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < dim; ++j) {
    const Complex d = r(j, j);
    const double mag = std::abs(d);
    if (mag > 0.0) q.col(j) *= d / mag;
  }
  return q;
}

PureState random_pure_state(int qubits, Rng& rng) {
  check_qubit_cap(qubits, "random_pure_state");
  Vector v = ginibre(Eigen::Index{1} << qubits, 1, rng).col(0);
  v /= v.norm();
  return PureState(std::move(v));
}

DensityOperator random_density(int qubits, Rng& rng, int rank) {
  check_qubit_cap(qubits, "random_density");
  const Eigen::Index dim = Eigen::Index{1} << qubits;
  const Eigen::Index r = rank <= 0 ? dim : std::min<Eigen::Index>(rank, dim);
  const Matrix g = ginibre(dim, r, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  rho = 0.5 * (rho + rho.adjoint()).eval();
  return DensityOperator::assume_positive(std::move(rho));
}

KrausChannel random_channel(int in_qubits, int out_qubits, int num_kraus, Rng& rng) {
  check_qubit_cap(std::max(in_qubits, out_qubits), "random_channel");
  if (num_kraus < 1) throw std::invalid_argument("random_channel: need at least one Kraus operator");
  const Eigen::Index din = Eigen::Index{1} << in_qubits;
  const Eigen::Index dout = Eigen::Index{1} << out_qubits;
  const Eigen::Index big = dout * num_kraus;
  if (big < din) throw DimensionError("random_channel: too few Kraus operators for an isometry");
  const Matrix v = haar_unitary(big, rng).leftCols(din);
  std::vector<Matrix> ops;
  ops.reserve(static_cast<std::size_t>(num_kraus));
  for (int k = 0; k < num_kraus; ++k) ops.push_back(v.middleRows(k * dout, dout));
  return KrausChannel(std::move(ops));
}

}  // namespace qcp
