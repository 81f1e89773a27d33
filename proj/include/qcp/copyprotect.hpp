#pragma once

// Copy protection of point functions from the trap authentication scheme.
//
// Protect(p) = A_p |0^m>. Eval(sigma, x) runs verification with key x and
// outputs 1 iff it accepts. Points are k-bit strings, k = the scheme's key length.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qcp/designs.hpp"
#include "qcp/qas.hpp"

namespace qcp {

/// P_p(x) = 1 iff x = p.
struct PointFunction {
  BitString point;
  int operator()(const BitString& x) const;
};

// ---- challenge distributions ------------------------------------------------

/// Finite distribution over l-bit strings.
class ChallengeDistribution {
 public:
  enum class Kind { kUniform, kDhalf, kTr, kTable };

  /// R: uniform over {0,1}^l.
  static ChallengeDistribution uniform(int bits);
  /// D^{1/2}_p: mass 1/2 at p, 1/(2(2^l - 1)) elsewhere.
  static ChallengeDistribution dhalf(const BitString& p);
  /// T^(r)_p: mass r at p, (1 - r)/(2^l - 1) elsewhere.
  static ChallengeDistribution tr(const BitString& p, double r);
  /// Explicit table indexed by x; must be nonnegative and sum to 1 within 1e-12.
  static ChallengeDistribution table(int bits, std::vector<double> probs);

  Kind kind() const noexcept { return kind_; }
  int bits() const noexcept { return bits_; }
  std::uint32_t support_size() const noexcept { return std::uint32_t{1} << bits_; }
  /// The distinguished point of Dhalf / Tr.
  const BitString& point() const;
  double mass_at_point() const noexcept { return r_; }

  double prob(std::uint32_t x) const;
  std::vector<double> probabilities() const;
  BitString sample(Rng& rng) const;
  nlohmann::json to_json() const;

 private:
  ChallengeDistribution() = default;
  Kind kind_ = Kind::kUniform;
  int bits_ = 0;
  BitString point_;
  double r_ = 0.0;
  std::vector<double> table_;
  std::vector<double> cdf_;
};

/// Independent draws from a and b.
std::pair<BitString, BitString> sample_pair(const ChallengeDistribution& a, const ChallengeDistribution& b, Rng& rng);

// ---- programs ---------------------------------------------------------------

/// A copy-protected program: a pure state on Y plus scheme metadata. Plain
/// programs encode their point directly; mixed programs carry a classical
/// permutation parameter r and encode h_r(p).
class ProtectedProgram {
 public:
  ProtectedProgram(QasHandle scheme, Vector state, std::optional<PermParam> mix = std::nullopt,
                   std::shared_ptr<const PairwisePermFamily> family = nullptr);

  const QasScheme& scheme() const noexcept { return *scheme_; }
  const QasHandle& scheme_handle() const noexcept { return scheme_; }
  const Vector& state() const noexcept { return state_; }
  bool mixed() const noexcept { return mix_.has_value(); }
  const PermParam& mix_param() const;
  const PairwisePermFamily& family() const;

  bool consumed() const noexcept { return consumed_; }
  /// Marks the program consumed; throws StateError if it already was.
  void consume();
  /// Replaces the state (used by the program-preserving evaluation).
  void set_state(Vector state);

  /// {"scheme": {...}, "kind": "plain"|"mixed", "r": [m, b]?, "state": matrix-json}
  nlohmann::json to_json() const;
  static ProtectedProgram from_json(const nlohmann::json& j, QasHandle scheme);

 private:
  QasHandle scheme_;
  Vector state_;
  std::optional<PermParam> mix_;
  std::shared_ptr<const PairwisePermFamily> family_;
  bool consumed_ = false;
};

/// A_p |0^m>.
ProtectedProgram protect(QasHandle scheme, const BitString& p);
/// The program state A_p |0^m> without wrapping it.
Vector protected_state(const QasScheme& scheme, std::uint64_t p);

/// Pr[Eval(sigma, x) = 1] = ||A_x^dagger sigma||^2 for a pure program state.
double eval_accept_probability(const QasScheme& scheme, const Vector& state, std::uint64_t x);

/// Destructive evaluation: measures the verification flag for key x and
/// consumes the program. Mixed programs are evaluated at h_r(x).
int eval(ProtectedProgram& program, const BitString& x, Rng& rng);

/// Both branches of the program-preserving circuit W_x^dagger CNOT_{O,O'} W_x:
/// probability of reading b on O' and the normalized post-state on Y.
struct PreservingBranches {
  std::array<double, 2> probability{};
  std::array<Vector, 2> post_state;
};
PreservingBranches preserving_eval_branches(const QasScheme& scheme, const Vector& state, std::uint64_t x);

/// Program-preserving evaluation: samples the O' outcome, updates the program
/// in place and returns the bit. Does not consume the program.
int eval_preserving(ProtectedProgram& program, const BitString& x, Rng& rng);

/// Outcome-averaged output of the preserving circuit on Y (what remains if the
/// bit is discarded): sum_b p_b |post_b><post_b|.
DensityOperator eval_preserving_channel(const ProtectedProgram& program, const BitString& x);

/// E_{x <- dist} Pr[Eval(Protect(p), x) = P_p(x)], exact.
double correctness_exact(const QasScheme& scheme, const BitString& p, const ChallengeDistribution& dist);

/// (1/(2^k - 1)) sum_{x != p} Pr[Eval(Protect(p), x) = 1], through the key-sum operator.
double wrong_key_accept_excluding(const QasScheme& scheme, const BitString& p);

/// E_{x <- dist} Delta(rho, rho~_x) for the outcome-averaged preserving evaluation.
double reuse_damage(const ProtectedProgram& program, const ChallengeDistribution& dist);

// ---- MIX wrapper ------------------------------------------------------------

/// Samples r uniformly (unless `forced` is given) and returns Protect(h_r(p)) with r attached.
ProtectedProgram mix_protect(QasHandle scheme, std::shared_ptr<const PairwisePermFamily> family, const BitString& p,
                             Rng& rng, std::optional<PermParam> forced = std::nullopt);
/// Eval at h_r(x). Throws StateError on a plain program.
int mix_eval(ProtectedProgram& program, const BitString& x, Rng& rng);

/// Pr_r[mix_eval(mix_protect(p), x) = P_p(x)], exact by enumerating every r.
double mix_correct_probability(const QasScheme& scheme, const PairwisePermFamily& family, const BitString& p,
                               const BitString& x);

}  // namespace qcp
