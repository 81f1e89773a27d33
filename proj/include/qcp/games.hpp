#pragma once

// Security games for the point-function schemes.
//
// Free game (copy protection): the challenger protects a point p <- D, a pirate
// channel splits the program between Bob (honest evaluator, register Y) and
// Charlie (side register), both are challenged independently and the
// adversary wins iff both answers are right.
//
// SSL game: the lessee applies a channel Y -> Y (x) A, returns Y, the lessor
// verifies (abort is a loss), and the lessee answers a challenge by measuring A.
//
// Trials are pure-state trajectories: one Kraus branch is drawn per trial, and
// every measurement collapses the joint vector.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qcp/copyprotect.hpp"
#include "qcp/designs.hpp"

namespace qcp {

inline constexpr int kGameReportSchemaVersion = 1;

// ---- challenge families and baselines ---------------------------------------

/// p -> T^(r)_p: mass r on p, the rest spread uniformly. The uniform family
/// is r = 2^-l, resolved once the length is known.
class ChallengeFamily {
 public:
  static ChallengeFamily dhalf();
  static ChallengeFamily tr(double r);
  static ChallengeFamily uniform();

  bool is_uniform() const noexcept { return uniform_; }
  /// Mass at the point for l-bit strings, exactly.
  Rational mass_at_point(int bits) const;
  /// Mass at each other string, exactly.
  Rational mass_elsewhere(int bits) const;
  double mass_at_point_double(int bits) const;

  ChallengeDistribution at(const BitString& p) const;
  nlohmann::json to_json() const;
  static ChallengeFamily from_json(const nlohmann::json& j);

 private:
  double r_ = 0.5;
  Rational r_exact_{1, 2};
  bool uniform_ = false;
};

/// Exact probability of x under a point distribution (doubles in tables are
/// converted exactly).
Rational exact_prob(const ChallengeDistribution& d, std::uint32_t x);

/// One circuit of a baseline computation: its weight under D, its truth table
/// and the challenge distribution attached to it.
struct BaselineEntry {
  Rational weight;
  std::vector<std::uint8_t> outputs;
  std::vector<Rational> challenge;
};

/// E_{x} max_b Pr[C(x) = b | x] for the joint law weight(C) * challenge_C(x);
/// ties go to b = 0.
Rational p_triv(const std::vector<BaselineEntry>& circuits);

/// Single-challenge baseline for point functions under D and {family(p)}.
Rational p_ind(const ChallengeDistribution& circuits, const ChallengeFamily& family);
/// Charlie's baseline in the free game. Only the marginal of Charlie's
/// challenge enters, so Bob's family does not affect the value.
Rational p_marg(const ChallengeDistribution& circuits, const ChallengeFamily& bob, const ChallengeFamily& charlie);

// ---- games ------------------------------------------------------------------

enum class GameKind { kFree, kSsl };

std::string to_string(GameKind g);
GameKind game_kind_from_string(const std::string& s);

struct GameSpec {
  GameKind game = GameKind::kFree;
  QasHandle scheme;
  /// D over points.
  ChallengeDistribution circuits = ChallengeDistribution::uniform(1);
  /// Bob's challenge family (free game only).
  ChallengeFamily bob = ChallengeFamily::dhalf();
  /// Charlie's challenge family (free game) or the lessee's (SSL game).
  ChallengeFamily challenge = ChallengeFamily::dhalf();
  /// SSL verification samples from T^(verify_r)_p.
  double verify_r = 1.0;

  /// Uniform points, Dhalf challenges, point verification.
  static GameSpec standard(GameKind game, QasHandle scheme);
  nlohmann::json to_json() const;
};

/// p^marg for the free game, p^ind for the SSL game.
double game_baseline(const GameSpec& spec);
/// Free: p^marg + (3/2)eps + sqrt(2 eps). SSL: p^ind + eps.
double game_bound(const GameSpec& spec);

// ---- adversaries ------------------------------------------------------------

struct TrialContext {
  const GameSpec& spec;
  /// The sampled point. Adversaries that read it are oracle-aided and exist
  /// only to probe the harness.
  BitString point;
  std::uint64_t trial = 0;
};

/// One realization of an adversary.
struct AdversaryInstance {
  /// Kraus operators from Y into Y (x) side, trace preserving. Y is Bob's
  /// register in the free game and the returned register in the SSL game.
  std::vector<Matrix> kraus;
  int side_qubits = 0;
  /// Projector Pi_x on the side register for challenge x, given the realized
  /// Kraus branch. Outcome Pi_x means answer 1.
  std::function<Matrix(std::uint32_t x, std::size_t branch)> measure;
};

class Adversary {
 public:
  virtual ~Adversary() = default;
  virtual std::string name() const = 0;
  virtual AdversaryInstance instantiate(const TrialContext& ctx, Rng& rng) const = 0;
  /// True if instantiate never draws from rng.
  virtual bool deterministic() const { return true; }
  /// Closed-form win probability, when one is known.
  virtual std::optional<double> analytic(const GameSpec&) const { return std::nullopt; }
};

using AdversaryHandle = std::shared_ptr<const Adversary>;

/// Free game: Bob keeps the program, Charlie answers 0 from a fresh |0>.
AdversaryHandle trivial_forward();
/// Free game: Bob gets I/d, Charlie gets the program and evaluates honestly.
AdversaryHandle give_to_charlie();
/// Copies Y into the side register with CNOTs; the side is evaluated honestly.
AdversaryHandle cnot_clone();
/// The side register is |+>, measured in the computational basis.
AdversaryHandle random_guess();
/// SSL game: returns the program untouched and answers 0.
AdversaryHandle honest_return();
/// SSL game: returns I/d, keeps the program and evaluates it honestly.
AdversaryHandle keep_program();
/// Harness check only: the side register receives a second honest program.
AdversaryHandle two_copies();
/// Coherent key search: for each key in a budget of `budget` distinct keys
/// (the true point at a random position, the rest random), measures the
/// verification flag {Pi_k, I - Pi_k} on Y and stops at the first accept.
/// Charlie answers 1 iff x equals the key that was accepted.
AdversaryHandle keysearch(std::uint32_t budget);

/// Looks up an adversary by name (the names above, keysearch as
/// "keysearch-N"). Throws std::invalid_argument for unknown names.
AdversaryHandle make_adversary(const std::string& name);
std::vector<std::string> zoo(GameKind game);

// ---- runs -------------------------------------------------------------------

std::pair<double, double> wilson_interval(std::uint64_t wins, std::uint64_t trials, double confidence);

struct GameReport {
  GameKind game = GameKind::kFree;
  int m = 0, t = 0, k = 0;
  std::string adversary;
  std::uint64_t trials = 0;
  std::uint64_t wins = 0;
  double estimate = 0.0;
  double confidence = 0.99;
  double ci_lo = 0.0, ci_hi = 0.0;
  double baseline = 0.0;
  double bound = 0.0;
  std::optional<double> oracle;
  std::uint64_t seed = 0;
  nlohmann::json parameters;

  nlohmann::json to_json() const;
};

struct RunOptions {
  std::uint64_t trials = 10000;
  std::uint64_t seed = 0;
  double confidence = 0.99;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
};

/// Runs `opts.trials` trials; trial i draws from Rng(seed).split(i), so the
/// report does not depend on the thread count.
GameReport run_experiment(const GameSpec& spec, const Adversary& adversary, const RunOptions& opts);

/// Win probability of one trial given its realized instance, computed exactly
/// by summing over challenges and outcomes. Needs l <= 12.
double exact_trial_win(const GameSpec& spec, const BitString& p, const AdversaryInstance& inst);
/// E_p of exact_trial_win for deterministic adversaries.
double exact_win_probability(const GameSpec& spec, const Adversary& adversary);

/// Appends one row; writes the header first when the file is new or empty.
void append_csv(const std::filesystem::path& path, const GameReport& report);
std::string csv_header();
std::string csv_row(const GameReport& report);

}  // namespace qcp
