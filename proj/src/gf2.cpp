#include <array>
#include <bit>
#include <stdexcept>
#include <string>

#include "qcp/designs.hpp"

namespace qcp {

namespace {

constexpr std::array<std::uint32_t, 17> kPolys = {
    0,        0x3,    0x7,    0xB,    0x13,   0x25,   0x43,   0x83,    0x11B,
    0x211,    0x409,  0x805,  0x1009, 0x201B, 0x4021, 0x8003, 0x1002B,
};

int degree(std::uint64_t p) { return p == 0 ? -1 : 63 - std::countl_zero(p); }

std::uint64_t poly_mod(std::uint64_t a, std::uint64_t m) {
  const int dm = degree(m);
  for (int d = degree(a); d >= dm; d = degree(a)) a ^= m << (d - dm);
  return a;
}

}  // namespace

std::uint32_t irreducible_polynomial(int bits) {
  if (bits < 1 || bits > 16) throw std::invalid_argument("GF(2^l) supported for 1 <= l <= 16");
  return kPolys[static_cast<std::size_t>(bits)];
}

bool is_irreducible(std::uint32_t poly) {
  const int d = degree(poly);
  if (d < 1) return false;
  for (std::uint64_t f = 2; degree(f) <= d / 2; ++f) {
    if (poly_mod(poly, f) == 0) return false;
  }
  return true;
}

Gf2Field::Gf2Field(int bits) : bits_(bits), poly_(irreducible_polynomial(bits)) {}

std::uint32_t Gf2Field::mul(std::uint32_t a, std::uint32_t b) const noexcept {
  std::uint32_t acc = 0;
  const std::uint32_t top = std::uint32_t{1} << bits_;
  while (b != 0) {
    if (b & 1U) acc ^= a;
    b >>= 1;
    a <<= 1;
    if (a & top) a ^= poly_;
  }
  return acc;
}

std::uint32_t Gf2Field::inv(std::uint32_t a) const {
  if (a == 0 || a >= order()) throw std::invalid_argument("Gf2Field::inv: argument must be a nonzero field element");
  // a^(2^l - 2) = a^(-1).
  std::uint32_t result = 1;
  std::uint32_t base = a;
  for (std::uint32_t e = order() - 2; e != 0; e >>= 1) {
    if (e & 1U) result = mul(result, base);
    base = mul(base, base);
  }
  return result;
}

PairwisePermFamily::PairwisePermFamily(int bits) : field_(bits) {}

std::uint64_t PairwisePermFamily::size() const noexcept {
  const std::uint64_t q = field_.order();
  return (q - 1) * q;
}

void PairwisePermFamily::check(const PermParam& r) const {
  if (r.m == 0) throw std::invalid_argument("pairwise permutation: m must be nonzero");
  if (r.m >= field_.order() || r.b >= field_.order()) {
    throw std::invalid_argument("pairwise permutation: parameter outside GF(2^" + std::to_string(bits()) + ")");
  }
}

PermParam PairwisePermFamily::param(std::uint32_t m, std::uint32_t b) const {
  const PermParam r{m, b};
  check(r);
  return r;
}

PermParam PairwisePermFamily::param_at(std::uint64_t index) const {
  if (index >= size()) throw std::out_of_range("pairwise permutation: parameter index out of range");
  const std::uint64_t q = field_.order();
  return {static_cast<std::uint32_t>(index / q + 1), static_cast<std::uint32_t>(index % q)};
}

PermParam PairwisePermFamily::sample(Rng& rng) const { return param_at(rng.uniform_below(size())); }

std::uint32_t PairwisePermFamily::apply(const PermParam& r, std::uint32_t x) const {
  check(r);
  if (x >= field_.order()) throw std::invalid_argument("pairwise permutation: input too long");
  return Gf2Field::add(field_.mul(r.m, x), r.b);
}

BitString PairwisePermFamily::apply(const PermParam& r, const BitString& x) const {
  if (x.length() != bits()) throw DimensionError("pairwise permutation: input length differs from l");
  return BitString(apply(r, x.value()), bits());
}

// ---- eps-uniform map ----------------------------------------------------------

EpsUniformMap::EpsUniformMap(int domain_bits, std::uint64_t range_size) : k_(domain_bits), range_(range_size) {
  if (k_ < 1 || k_ > 62) throw std::invalid_argument("EpsUniformMap: key bits must lie in [1, 62]");
  if (range_ < 1) throw std::invalid_argument("EpsUniformMap: range must be nonempty");
  const std::uint64_t domain = std::uint64_t{1} << k_;
  const std::uint64_t q = domain / range_;
  const std::uint64_t rem = domain % range_;
  // rem residues have q + 1 preimages, the others q.
  const Rational inv_b(1, range_);
  const Rational heavy = abs(Rational(q + 1, domain) - inv_b);
  const Rational light = abs(Rational(q, domain) - inv_b);
  eps_exact_ = (Rational(rem) * heavy + Rational(range_ - rem) * light) / 2;
  eps_ = static_cast<double>(eps_exact_);
}

std::uint64_t EpsUniformMap::apply(std::uint64_t x) const {
  if (k_ < 64 && (x >> k_) != 0) throw std::invalid_argument("EpsUniformMap: key longer than k bits");
  return x % range_;
}

std::uint64_t EpsUniformMap::preimage_count(std::uint64_t b) const {
  if (b >= range_) throw std::out_of_range("EpsUniformMap: residue out of range");
  const std::uint64_t domain = std::uint64_t{1} << k_;
  return domain / range_ + (b < domain % range_ ? 1 : 0);
}

Rational EpsUniformMap::bound_exact() const { return Rational(range_, std::uint64_t{4} << k_); }

double EpsUniformMap::bound() const { return static_cast<double>(bound_exact()); }

EpsUniformMap eps_uniform_build(int k, std::uint64_t range_size) { return EpsUniformMap(k, range_size); }

}  // namespace qcp
