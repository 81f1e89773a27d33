#pragma once

// Secure software leasing built on the point-function copy protection scheme,
// and its lift to compute-and-compare programs CC_y^f(x) = [f(x) = y].
//
// Lease is Protect; Eval is the program-preserving evaluation; Verify samples
// x from T'_p and runs the destructive evaluation on the returned state.

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "qcp/copyprotect.hpp"

namespace qcp {

/// The secret key of the construction is empty.
struct SslSecretKey {};

struct SslScheme {
  QasHandle base;
  /// Verification samples x from T^(r)_p with this r. r = 1 verifies at the point.
  double verify_r = 1.0;

  SslSecretKey gen() const { return {}; }
  ChallengeDistribution verify_distribution(const BitString& p) const;
  nlohmann::json to_json() const;
};

SslScheme make_ssl_scheme(QasHandle base, double verify_r = 1.0);

/// Explicit truth table f: {0,1}^n -> {0,1}^m with n <= 8.
class FunctionTable {
 public:
  static constexpr int kMaxInputBits = 8;

  FunctionTable(int input_bits, int output_bits, std::vector<std::uint32_t> values);
  /// f(x) = x on `bits` bits.
  static FunctionTable identity(int bits);
  static FunctionTable random(int input_bits, int output_bits, Rng& rng);

  int input_bits() const noexcept { return n_; }
  int output_bits() const noexcept { return m_; }
  const std::vector<std::uint32_t>& values() const noexcept { return values_; }
  BitString operator()(const BitString& x) const;

  nlohmann::json to_json() const;
  static FunctionTable from_json(const nlohmann::json& j);

  friend bool operator==(const FunctionTable&, const FunctionTable&) = default;

 private:
  int n_;
  int m_;
  std::vector<std::uint32_t> values_;
};

struct CompareFunction {
  FunctionTable f;
  BitString y;
  /// 1 iff f(x) = y.
  int operator()(const BitString& x) const;
};

/// A leased point program, or the pair (f, point program for y).
class LeasedProgram {
 public:
  explicit LeasedProgram(ProtectedProgram program, std::optional<FunctionTable> f = std::nullopt);

  ProtectedProgram& program() noexcept { return program_; }
  const ProtectedProgram& program() const noexcept { return program_; }
  bool is_compare() const noexcept { return f_.has_value(); }
  const FunctionTable& function() const;

  nlohmann::json to_json() const;
  static LeasedProgram from_json(const nlohmann::json& j, QasHandle scheme);

 private:
  ProtectedProgram program_;
  std::optional<FunctionTable> f_;
};

/// One verification: the sampled challenge, the destructive-eval output and v.
struct VerifyRecord {
  BitString x;
  int outcome = 0;
  bool accept = false;
  nlohmann::json to_json() const;
};

/// Writes `record` as one JSON line.
void write_transcript_line(std::ostream& out, const VerifyRecord& record);

LeasedProgram ssl_lease(const SslScheme& scheme, const PointFunction& c);
/// Program-preserving evaluation at x; updates the program in place.
int ssl_eval(LeasedProgram& program, const BitString& x, Rng& rng);
VerifyRecord ssl_verify(const SslScheme& scheme, const PointFunction& c, const DensityOperator& returned, Rng& rng);
VerifyRecord ssl_verify(const SslScheme& scheme, const PointFunction& c, const Vector& returned, Rng& rng);
/// Pr[ssl_verify accepts], exact.
double ssl_verify_accept_probability(const SslScheme& scheme, const PointFunction& c, const DensityOperator& returned);

LeasedProgram cc_lease(const SslScheme& scheme, const CompareFunction& c);
/// Point-program evaluation at f(x).
int cc_eval(LeasedProgram& program, const BitString& x, Rng& rng);
VerifyRecord cc_verify(const SslScheme& scheme, const CompareFunction& c, const DensityOperator& returned, Rng& rng);

/// Distribution of f(x) for x drawn from `dist`.
ChallengeDistribution pushforward(const ChallengeDistribution& dist, const FunctionTable& f);

/// Security budget the point-function scheme needs for the compare lift to be
/// epsilon-secure: (p_triv_cc - p_triv_pf) + epsilon.
double eps_f(double p_triv_cc, double p_triv_pf, double epsilon);

}  // namespace qcp
