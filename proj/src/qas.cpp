#include "qcp/qas.hpp"

#include <cmath>
#include <string>

#include "qcp/kernels/kernels.hpp"

namespace qcp {

namespace {

// Refuse schemes whose isometry table would exceed this many bytes.
constexpr double kTableBudgetBytes = 512.0 * 1024 * 1024;
constexpr int kMaxEnumerableKeyBits = 20;

void require_message(const QasScheme& s, Eigen::Index dim) {
  if (dim != (Eigen::Index{1} << s.message_qubits())) throw DimensionError("auth: message dimension is not 2^m");
}

void require_y(const QasScheme& s, Eigen::Index dim) {
  if (dim != (Eigen::Index{1} << s.y_qubits())) throw DimensionError("verify: state dimension is not 2^(m+t)");
}

double real_trace_product(const Matrix& a, const Matrix& b) {
  // Tr(A B) for equal-size square matrices without forming the product.
  return (a.transpose().cwiseProduct(b)).sum().real();
}

}  // namespace

QasScheme::QasScheme(int m, int t, int k)
    : m_(m),
      t_(t),
      k_(k),
      design_(shared_clifford(m + t)),
      key_map_(k, static_cast<std::uint64_t>(std::min<BigCount>(design_->cardinality(),
                                                                 BigCount(std::uint64_t{1} << 62)))) {}

std::shared_ptr<const QasScheme> QasScheme::build(int m, int t, int k) {
  if (m < 1 || t < 1) throw std::invalid_argument("QasScheme: need m >= 1 and t >= 1");
  if (k < 1 || k > BitString::kMaxLength) throw std::invalid_argument("QasScheme: key bits must lie in [1, 30]");
  if (m + t > kMaxCliffordQubits) {
    throw CapacityError("QasScheme: m + t = " + std::to_string(m + t) + " exceeds the Clifford limit of " +
                        std::to_string(kMaxCliffordQubits));
  }
  check_qubit_cap(m + t, "QasScheme");
  return std::shared_ptr<const QasScheme>(new QasScheme(m, t, k));
}

double QasScheme::design_epsilon() const { return std::exp2((6.0 - t_) / 3.0); }

double QasScheme::epsilon() const { return design_epsilon() + epsilon_prime(); }

std::uint64_t QasScheme::design_index(std::uint64_t key) const {
  if ((key >> k_) != 0) throw DimensionError("QasScheme: key longer than k bits");
  return key_map_.apply(key);
}

std::uint64_t QasScheme::verify_design_index(std::uint64_t key) const {
  return (design_index(key) + verify_shift_) % key_map_.range_size();
}

Matrix QasScheme::build_isometry(std::uint64_t design_index) const {
  const Matrix u = design_->element(design_index);
  const Eigen::Index msg = Eigen::Index{1} << m_;
  Matrix a(u.rows(), msg);
  for (Eigen::Index i = 0; i < msg; ++i) a.col(i) = u.col(i << t_);
  return a;
}

const Matrix& QasScheme::cached_isometry(std::uint64_t design_index) const {
  std::call_once(table_once_, [this] {
    const std::uint64_t n = std::min<std::uint64_t>(key_map_.range_size(), key_count() + 1);
    const double bytes = static_cast<double>(n) * std::exp2(y_qubits() + m_) * sizeof(Complex);
    if (bytes > kTableBudgetBytes) {
      throw CapacityError("QasScheme: isometry table for this (m, t, k) exceeds the memory budget");
    }
    table_.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) table_.push_back(build_isometry(i));
  });
  return table_.at(design_index);
}

const Matrix& QasScheme::isometry(std::uint64_t key) const { return cached_isometry(design_index(key)); }

const Matrix& QasScheme::verify_isometry(std::uint64_t key) const {
  return cached_isometry(verify_design_index(key));
}

Matrix QasScheme::verify_unitary(std::uint64_t key) const { return design_->element(verify_design_index(key)); }

Matrix QasScheme::isometry_for_index(std::uint64_t design_index) const {
  if (BigCount(design_index) >= design_->cardinality()) throw std::out_of_range("QasScheme: design index out of range");
  return build_isometry(design_index);
}

const Matrix& QasScheme::key_sum_projector() const {
  if (k_ > kMaxEnumerableKeyBits) throw CapacityError("key_sum_projector: key space too large to enumerate");
  std::call_once(key_sum_once_, [this] {
    const Eigen::Index dim = Eigen::Index{1} << y_qubits();
    key_sum_ = Matrix::Zero(dim, dim);
    const std::uint64_t distinct = std::min<std::uint64_t>(key_map_.range_size(), key_count());
    for (std::uint64_t idx = 0; idx < distinct; ++idx) {
      const Matrix& a = cached_isometry(idx);
      key_sum_.noalias() += static_cast<double>(key_map_.preimage_count(idx)) * (a * a.adjoint());
    }
  });
  return key_sum_;
}

const Matrix& QasScheme::design_sum_projector() const {
  if (!design_->enumerated()) throw StateError("design_sum_projector: design is not enumerated");
  std::call_once(design_sum_once_, [this] {
    const Eigen::Index dim = Eigen::Index{1} << y_qubits();
    design_sum_ = Matrix::Zero(dim, dim);
    cached_isometry(0);
    for (std::uint64_t idx = 0; idx < design_->size(); ++idx) {
      const Matrix a = idx < table_.size() ? table_[idx] : build_isometry(idx);
      design_sum_.noalias() += a * a.adjoint();
    }
  });
  return design_sum_;
}

std::shared_ptr<const QasScheme> QasScheme::with_corrupted_verify_key_map() const {
  auto copy = std::shared_ptr<QasScheme>(new QasScheme(m_, t_, k_));
  copy->verify_shift_ = 1;
  return copy;
}

nlohmann::json QasScheme::to_json() const {
  nlohmann::json j = {{"m", m_},
                      {"t", t_},
                      {"k", k_},
                      {"design_id", design_->id()},
                      {"epsilon", epsilon()},
                      {"epsilon_prime", epsilon_prime()}};
  j["irreducible_poly"] = k_ <= 16 ? nlohmann::json(irreducible_polynomial(k_)) : nlohmann::json(nullptr);
  return j;
}

// ---- channel operations -------------------------------------------------------

PureState auth(const QasScheme& s, std::uint64_t key, const PureState& message) {
  require_message(s, message.dimension());
  const Matrix& a = s.isometry(key);
  Vector out(a.rows());
  kernels::matvec(a, kernels::view(message.amplitudes()), kernels::view(out));
  return PureState(std::move(out));
}

DensityOperator auth(const QasScheme& s, std::uint64_t key, const DensityOperator& message) {
  require_message(s, message.dimension());
  const Matrix& a = s.isometry(key);
  return DensityOperator::assume_positive(a * message.matrix() * a.adjoint());
}

double accept_probability(const QasScheme& s, std::uint64_t key, const DensityOperator& y_state) {
  require_y(s, y_state.dimension());
  const Matrix& a = s.verify_isometry(key);
  return (a.adjoint() * y_state.matrix() * a).trace().real();
}

double accept_probability(const QasScheme& s, std::uint64_t key, const PureState& y_state) {
  require_y(s, y_state.dimension());
  const Matrix& a = s.verify_isometry(key);
  Vector proj(a.cols());
  kernels::adjoint_matvec(a, kernels::view(y_state.amplitudes()), kernels::view(proj));
  return kernels::norm_sq(kernels::view(proj));
}

SubnormalizedOperator verify_accept_branch(const QasScheme& s, std::uint64_t key, const DensityOperator& y_state) {
  require_y(s, y_state.dimension());
  const Matrix& a = s.verify_isometry(key);
  Matrix branch = a.adjoint() * y_state.matrix() * a;
  branch = 0.5 * (branch + branch.adjoint()).eval();
  return SubnormalizedOperator(std::move(branch));
}

DensityOperator verify_channel(const QasScheme& s, std::uint64_t key, const DensityOperator& y_state) {
  const SubnormalizedOperator acc = verify_accept_branch(s, key, y_state);
  const double reject = std::max(0.0, 1.0 - acc.weight());
  const Eigen::Index msg = Eigen::Index{1} << s.message_qubits();
  Matrix flag_acc = Matrix::Zero(2, 2);
  flag_acc(1, 1) = 1.0;
  Matrix flag_rej = Matrix::Zero(2, 2);
  flag_rej(0, 0) = 1.0;
  Matrix out = kron(acc.matrix(), flag_acc) +
               kron(Matrix(Matrix::Identity(msg, msg) * (reject / static_cast<double>(msg))), flag_rej);
  return DensityOperator::assume_positive(std::move(out));
}

VerifyOutcome verify(const QasScheme& s, std::uint64_t key, const DensityOperator& y_state, Rng& rng) {
  const SubnormalizedOperator acc = verify_accept_branch(s, key, y_state);
  const double p = std::clamp(acc.weight(), 0.0, 1.0);
  const bool accepted = p >= 1e-12 && rng.bernoulli(p);
  if (accepted) return {true, DensityOperator::assume_positive(acc.matrix() / acc.weight()), p};
  return {false, DensityOperator::maximally_mixed(s.message_qubits()), p};
}

double avg_wrong_key_accept(const QasScheme& s, const DensityOperator& y_state, WrongKeyMode mode,
                            std::uint64_t samples, Rng* rng) {
  require_y(s, y_state.dimension());
  switch (mode) {
    case WrongKeyMode::kDesign:
      return real_trace_product(s.design_sum_projector(), y_state.matrix()) / static_cast<double>(s.design().size());
    case WrongKeyMode::kKeys:
      return real_trace_product(s.key_sum_projector(), y_state.matrix()) / static_cast<double>(s.key_count());
    case WrongKeyMode::kSampled: {
      if (rng == nullptr || samples == 0) throw std::invalid_argument("avg_wrong_key_accept: sampling needs rng and samples");
      double acc = 0.0;
      for (std::uint64_t i = 0; i < samples; ++i) acc += accept_probability(s, rng->uniform_below(s.key_count()), y_state);
      return acc / static_cast<double>(samples);
    }
  }
  throw std::invalid_argument("avg_wrong_key_accept: unknown mode");
}

// ---- bookkeeping --------------------------------------------------------------

double qas_epsilon_upper(int n, double t, int k) {
  return std::exp2(2.0 - t / 3.0) + std::exp2(5.0 * n + 5.0 * t - k - 2.0);
}

double qas_t_opt(int n, int k) { return (12.0 - 3.0 * std::log2(15.0) + 3.0 * k - 15.0 * n) / 16.0; }

double qas_existence_epsilon(int n, int k) { return 5.0 * std::exp2((5.0 * n - k) / 16.0); }

}  // namespace qcp
