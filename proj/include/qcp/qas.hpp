#pragma once

// Trap-code quantum authentication over a Clifford 2-design.
//
// Registers: Y = M (m message qubits) followed by T (t trap qubits).
// Keys are k-bit strings; key x selects design element U_{f(x)} with
// f(x) = x mod |design|, and
//   A_x |psi> = U_{f(x)} (|psi> (x) |0^t>).
// Verification with key x applies U_{f(x)}^dagger, accepts iff the traps read
// all zero, and on rejection replaces the message by I/2^m.

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include <json.hpp>

#include "qcp/designs.hpp"
#include "qcp/qmath.hpp"

namespace qcp {

class QasScheme {
 public:
  /// Builds the scheme for (m, t, k). The design is the Clifford group on
  /// m + t qubits: enumerated for m + t <= 2, addressed by unranking above.
  static std::shared_ptr<const QasScheme> build(int m, int t, int k);

  int message_qubits() const noexcept { return m_; }
  int trap_qubits() const noexcept { return t_; }
  int key_bits() const noexcept { return k_; }
  int y_qubits() const noexcept { return m_ + t_; }
  std::uint64_t key_count() const noexcept { return std::uint64_t{1} << k_; }

  const UnitaryDesign& design() const noexcept { return *design_; }
  const EpsUniformMap& key_map() const noexcept { return key_map_; }
  /// 2^((6 - t)/3).
  double design_epsilon() const;
  double epsilon_prime() const noexcept { return key_map_.epsilon_prime(); }
  /// design_epsilon() + epsilon_prime().
  double epsilon() const;

  /// f(key); throws if key does not fit in k bits.
  std::uint64_t design_index(std::uint64_t key) const;
  /// Design index used by verification. Equals design_index unless the scheme
  /// was built by with_corrupted_verify_key_map().
  std::uint64_t verify_design_index(std::uint64_t key) const;

  /// A_key as a 2^(m+t) x 2^m matrix.
  const Matrix& isometry(std::uint64_t key) const;
  /// Isometry used by verification (see verify_design_index).
  const Matrix& verify_isometry(std::uint64_t key) const;
  /// Full design unitary used by verification with `key`.
  Matrix verify_unitary(std::uint64_t key) const;
  /// A for an arbitrary design index.
  Matrix isometry_for_index(std::uint64_t design_index) const;

  /// sum over all keys x of A_x A_x^dagger (built once; 2^k <= 2^20).
  const Matrix& key_sum_projector() const;
  /// sum over all design elements of A A^dagger (enumerated designs only).
  const Matrix& design_sum_projector() const;

  /// Copy whose verification uses index f(x) + 1 mod |design|: a deliberately
  /// broken scheme used as a negative control.
  std::shared_ptr<const QasScheme> with_corrupted_verify_key_map() const;
  bool corrupted() const noexcept { return verify_shift_ != 0; }

  /// {m, t, k, design_id, irreducible_poly, epsilon, epsilon_prime}.
  nlohmann::json to_json() const;

 private:
  QasScheme(int m, int t, int k);
  Matrix build_isometry(std::uint64_t design_index) const;
  const Matrix& cached_isometry(std::uint64_t design_index) const;

  int m_, t_, k_;
  std::shared_ptr<const UnitaryDesign> design_;
  EpsUniformMap key_map_;
  std::uint64_t verify_shift_ = 0;

  // Isometries for design indices [0, min(|design|, 2^k)), built on first use.
  mutable std::once_flag table_once_;
  mutable std::vector<Matrix> table_;
  mutable std::once_flag key_sum_once_;
  mutable Matrix key_sum_;
  mutable std::once_flag design_sum_once_;
  mutable Matrix design_sum_;
};

using QasHandle = std::shared_ptr<const QasScheme>;

/// Throws DimensionError unless state dimension is 2^m.
PureState auth(const QasScheme& s, std::uint64_t key, const PureState& message);
DensityOperator auth(const QasScheme& s, std::uint64_t key, const DensityOperator& message);

/// Tr[A A^dagger rho] for the verification isometry of `key`.
double accept_probability(const QasScheme& s, std::uint64_t key, const DensityOperator& y_state);
double accept_probability(const QasScheme& s, std::uint64_t key, const PureState& y_state);

/// The accept branch A^dagger rho A (trace = acceptance probability).
SubnormalizedOperator verify_accept_branch(const QasScheme& s, std::uint64_t key, const DensityOperator& y_state);

/// The full verification channel with an explicit flag qubit F appended
/// after M:  A^dagger rho A (x) |1><1|  +  Tr[(I - A A^dagger) rho] I/2^m (x) |0><0|.
/// F = |1> is Acc, |0> is Rej.
DensityOperator verify_channel(const QasScheme& s, std::uint64_t key, const DensityOperator& y_state);

struct VerifyOutcome {
  bool accepted = false;
  /// Normalized message on M: the decoded state on accept, I/2^m on reject.
  DensityOperator message_state;
  /// Exact acceptance probability of the branch draw.
  double accept_probability = 0.0;
};

/// Samples accept/reject with the exact probability and returns the branch.
VerifyOutcome verify(const QasScheme& s, std::uint64_t key, const DensityOperator& y_state, Rng& rng);

enum class WrongKeyMode {
  kDesign,   ///< exact average over every design element
  kKeys,     ///< exact average over every k-bit key
  kSampled,  ///< Monte Carlo over uniformly drawn keys
};

/// E_key Tr[A_key A_key^dagger rho].
double avg_wrong_key_accept(const QasScheme& s, const DensityOperator& y_state, WrongKeyMode mode,
                            std::uint64_t samples = 0, Rng* rng = nullptr);

// ---- key-length bookkeeping -------------------------------------------------

/// Upper bound 2^(2 - t/3) + 2^(5n + 5t - k - 2) on epsilon for the trap scheme
/// on n message qubits with a k-bit key, dropping the negative term.
double qas_epsilon_upper(int n, double t, int k);
/// Minimizer in t of qas_epsilon_upper: (12 - 3 log2(15) + 3k - 15n) / 16.
double qas_t_opt(int n, int k);
/// 5 * 2^((5n - k)/16).
double qas_existence_epsilon(int n, int k);

}  // namespace qcp
