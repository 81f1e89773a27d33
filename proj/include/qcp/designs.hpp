#pragma once

// Unitary 2-designs (Clifford groups), pairwise independent permutations over
// GF(2^l), and the mod-|B| key map.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "qcp/common.hpp"
#include "qcp/rng.hpp"

namespace qcp {

using Rational = boost::multiprecision::cpp_rational;
using BigCount = boost::multiprecision::uint128_t;

// ---- GF(2^l) ----------------------------------------------------------------

/// Irreducible polynomial used for GF(2^bits), as a bit mask including the
/// leading term. Defined for 1 <= bits <= 16:
///   2: x^2+x+1, 3: x^3+x+1, 4: x^4+x+1, 8: x^8+x^4+x^3+x+1, and low-weight
///   choices for the other degrees.
std::uint32_t irreducible_polynomial(int bits);
/// Brute-force irreducibility test over GF(2) (trial division), for deg <= 31.
bool is_irreducible(std::uint32_t poly);

class Gf2Field {
 public:
  explicit Gf2Field(int bits);
  int bits() const noexcept { return bits_; }
  std::uint32_t order() const noexcept { return std::uint32_t{1} << bits_; }
  std::uint32_t polynomial() const noexcept { return poly_; }

  static std::uint32_t add(std::uint32_t a, std::uint32_t b) noexcept { return a ^ b; }
  std::uint32_t mul(std::uint32_t a, std::uint32_t b) const noexcept;
  /// Multiplicative inverse; a must be nonzero.
  std::uint32_t inv(std::uint32_t a) const;

 private:
  int bits_;
  std::uint32_t poly_;
};

// ---- pairwise independent permutations --------------------------------------

/// h_r(x) = m * x + b over GF(2^l), with m != 0.
struct PermParam {
  std::uint32_t m = 1;
  std::uint32_t b = 0;
  friend bool operator==(const PermParam&, const PermParam&) = default;
};

class PairwisePermFamily {
 public:
  explicit PairwisePermFamily(int bits);

  int bits() const noexcept { return field_.bits(); }
  const Gf2Field& field() const noexcept { return field_; }
  /// (2^l - 1) * 2^l.
  std::uint64_t size() const noexcept;

  /// Validated parameter; throws std::invalid_argument for m = 0 or
  /// out-of-range values.
  PermParam param(std::uint32_t m, std::uint32_t b) const;
  /// Parameter number `index` in [0, size()): m = index / 2^l + 1, b = index mod 2^l.
  PermParam param_at(std::uint64_t index) const;
  PermParam sample(Rng& rng) const;

  std::uint32_t apply(const PermParam& r, std::uint32_t x) const;
  BitString apply(const PermParam& r, const BitString& x) const;

 private:
  void check(const PermParam& r) const;
  Gf2Field field_;
};

// ---- epsilon-uniform key map ------------------------------------------------

/// x -> x mod |B| from {0,1}^k onto [0, |B|), with its exact statistical
/// distance from uniform:
///   eps' = (1/2) sum_b | #{x : x mod |B| = b} / 2^k - 1/|B| |.
class EpsUniformMap {
 public:
  EpsUniformMap(int domain_bits, std::uint64_t range_size);

  int domain_bits() const noexcept { return k_; }
  std::uint64_t range_size() const noexcept { return range_; }
  std::uint64_t apply(std::uint64_t x) const;
  /// Number of x in {0,1}^k with x mod |B| = b.
  std::uint64_t preimage_count(std::uint64_t b) const;

  const Rational& epsilon_prime_exact() const noexcept { return eps_exact_; }
  double epsilon_prime() const noexcept { return eps_; }
  /// |B| / (4 * 2^k).
  Rational bound_exact() const;
  double bound() const;

 private:
  int k_;
  std::uint64_t range_;
  Rational eps_exact_;
  double eps_ = 0.0;
};

EpsUniformMap eps_uniform_build(int k, std::uint64_t range_size);

// ---- Clifford group ---------------------------------------------------------

/// Largest register for which Clifford elements are built densely.
inline constexpr int kMaxCliffordQubits = 6;
/// Largest register the closure enumeration supports.
inline constexpr int kMaxEnumeratedQubits = 2;
/// Version tag of the closure generator set {H_j, S_j, CNOT_{0,1}}; part of the cache key.
inline constexpr int kCliffordGeneratorVersion = 1;

/// |C_q / U(1)| = 2^(2q) * 2^(q^2) * prod_{j=1..q} (4^j - 1).
BigCount clifford_cardinality(int q);

/// Multiplies by a phase so the first entry of the first column whose
/// magnitude exceeds 1e-6 is real and positive.
Matrix canonical_phase(const Matrix& u);

/// Clifford element number `index` in [0, clifford_cardinality(q)) built from
/// its symplectic tableau. The index is a mixed-radix number whose digits pick,
/// in order, the images of X_1, Z_1, X_2, Z_2, ... under conjugation (each
/// among the Paulis that keep the required commutation relations) and then
/// the 2q image signs. Returned with canonical phase.
Matrix clifford_unrank(int q, BigCount index);
/// A uniformly random Clifford element, canonical phase.
Matrix clifford_sample(int q, Rng& rng);

/// Finite set of unitaries: either an explicit list or the full Clifford
/// group addressed through clifford_unrank.
class UnitaryDesign {
 public:
  /// Explicit list; every element must be unitary.
  static UnitaryDesign from_list(std::vector<Matrix> elements, std::string id = "explicit");
  /// Clifford group on q <= kMaxCliffordQubits qubits, addressed by unranking.
  static UnitaryDesign clifford_sampler(int q);

  int qubits() const noexcept { return qubits_; }
  const std::string& id() const noexcept { return id_; }
  bool enumerated() const noexcept { return !elements_.empty(); }
  BigCount cardinality() const noexcept { return cardinality_; }
  /// cardinality() as uint64; throws CapacityError if it does not fit.
  std::uint64_t size() const;

  /// Element number i. For enumerated designs this is the stored list order.
  Matrix element(std::uint64_t index) const;
  /// Enumerated designs only.
  const std::vector<Matrix>& elements() const;
  /// Uniform element.
  Matrix sample(Rng& rng) const;
  /// Index of `u` up to global phase, enumerated designs only.
  std::optional<std::uint64_t> find(const Matrix& u) const;

 private:
  UnitaryDesign() = default;
  void build_index();

  int qubits_ = 0;
  std::string id_;
  BigCount cardinality_ = 0;
  std::vector<Matrix> elements_;
  std::unordered_map<std::string, std::uint64_t> lookup_;
};

/// Complete Clifford group modulo phase for q in {1, 2}, generated by closing
/// {identity} under H_j, S_j and CNOT_{0,1} with phase canonicalization.
/// Element 0 is the identity; the order is the breadth-first discovery order.
/// When `cache_dir` is given the list is loaded from / stored to
/// cache_dir/clifford-q<q>-gens-v<version>.json.
UnitaryDesign clifford_enumerate(int q, const std::optional<std::filesystem::path>& cache_dir = std::nullopt);
/// Process-wide shared enumeration (built once, thread-safe).
std::shared_ptr<const UnitaryDesign> shared_clifford(int q);

/// Key for hashing a canonical-phase unitary (entries rounded to 1e-6).
std::string unitary_key(const Matrix& canonical);

// ---- frame potential --------------------------------------------------------

/// (1/N^2) sum_{U,V} |Tr(U^dagger V)|^4 over all ordered pairs. Enumerated designs only.
double frame_potential_exhaustive(const UnitaryDesign& design);
/// Unbiased estimate from `pairs` independently drawn ordered pairs.
double frame_potential_sampled(const UnitaryDesign& design, std::uint64_t pairs, Rng& rng);

}  // namespace qcp
