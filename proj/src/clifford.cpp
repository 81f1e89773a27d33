#include <bit>
#include <cmath>
#include <deque>
#include <filesystem>
#include <mutex>
#include <string>

#include "qcp/designs.hpp"
#include "qcp/kernels/kernels.hpp"
#include "qcp/matrix_json.hpp"
#include "qcp/qmath.hpp"

namespace qcp {

namespace {

// Symplectic vectors over F_2^(2q) are packed as (x << q) | z, where bit
// (q-1-j) of x and z refers to qubit j, so the masks line up with basis indices.

struct SignedPauli {
  std::uint32_t x = 0;
  std::uint32_t z = 0;
  bool negative = false;
};

int symplectic_product(std::uint32_t u, std::uint32_t v, int q) {
  const std::uint32_t mask = (std::uint32_t{1} << q) - 1;
  const std::uint32_t ux = u >> q, uz = u & mask;
  const std::uint32_t vx = v >> q, vz = v & mask;
  return (std::popcount(ux & vz) + std::popcount(uz & vx)) & 1;
}

// out = P in, with P = (-1)^neg i^{|x&z|} X^x Z^z (Hermitian).
void apply_pauli(const SignedPauli& p, const Vector& in, Vector& out) {
  static constexpr Complex kIPow[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const Complex phase = kIPow[std::popcount(p.x & p.z) & 3] * (p.negative ? -1.0 : 1.0);
  for (Eigen::Index b = 0; b < in.size(); ++b) {
    const auto ub = static_cast<std::uint32_t>(b);
    const double s = (std::popcount(p.z & ub) & 1) ? -1.0 : 1.0;
    out(static_cast<Eigen::Index>(ub ^ p.x)) = phase * s * in(b);
  }
}

std::uint64_t pow2(int e) { return std::uint64_t{1} << e; }

// Radices of the mixed-radix digits consumed by clifford_unrank, least
// significant first: (v_1, w_1, v_2, w_2, ..., signs).
std::vector<std::uint64_t> digit_radices(int q) {
  std::vector<std::uint64_t> r;
  for (int j = 0; j < q; ++j) {
    const int free = 2 * (q - j);
    r.push_back(pow2(free) - 1);
    r.push_back(pow2(free - 1));
  }
  r.push_back(pow2(2 * q));
  return r;
}

Matrix unrank_digits(int q, const std::vector<std::uint64_t>& digits) {
  const std::uint32_t space = std::uint32_t{1} << (2 * q);
  std::vector<std::uint32_t> chosen;
  std::vector<SignedPauli> xs(static_cast<std::size_t>(q)), zs(static_cast<std::size_t>(q));
  const std::uint32_t mask = (std::uint32_t{1} << q) - 1;

  auto orthogonal_to_chosen = [&](std::uint32_t u) {
    for (std::uint32_t c : chosen) {
      if (symplectic_product(u, c, q) != 0) return false;
    }
    return true;
  };

  for (int j = 0; j < q; ++j) {
    std::uint64_t dv = digits[static_cast<std::size_t>(2 * j)];
    std::uint32_t v = 0;
    for (std::uint32_t u = 1; u < space; ++u) {
      if (!orthogonal_to_chosen(u)) continue;
      if (dv-- == 0) {
        v = u;
        break;
      }
    }
    std::uint64_t dw = digits[static_cast<std::size_t>(2 * j + 1)];
    std::uint32_t w = 0;
    for (std::uint32_t u = 1; u < space; ++u) {
      if (symplectic_product(v, u, q) != 1 || !orthogonal_to_chosen(u)) continue;
      if (dw-- == 0) {
        w = u;
        break;
      }
    }
    if (v == 0 || w == 0) throw InvariantError("clifford_unrank: digit out of range");
    chosen.push_back(v);
    chosen.push_back(w);
    xs[static_cast<std::size_t>(j)] = {v >> q, v & mask, false};
    zs[static_cast<std::size_t>(j)] = {w >> q, w & mask, false};
  }
  const std::uint64_t signs = digits.back();
  for (int j = 0; j < q; ++j) {
    xs[static_cast<std::size_t>(j)].negative = (signs >> j) & 1U;
    zs[static_cast<std::size_t>(j)].negative = (signs >> (q + j)) & 1U;
  }

  // U|0> is the joint +1 eigenvector of the Z images; U|b> = prod_{j in b} X'_j U|0>.
  const Eigen::Index dim = Eigen::Index{1} << q;
  Vector psi0;
  Vector tmp(dim);
  for (Eigen::Index s = 0; s < dim; ++s) {
    Vector v = Vector::Zero(dim);
    v(s) = 1.0;
    for (const SignedPauli& z : zs) {
      apply_pauli(z, v, tmp);
      v = 0.5 * (v + tmp);
    }
    const double n = v.norm();
    if (n > 1e-6) {
      psi0 = v / n;
      break;
    }
  }
  Matrix u(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    Vector col = psi0;
    for (int j = 0; j < q; ++j) {
      if ((b >> (q - 1 - j)) & 1) {
        apply_pauli(xs[static_cast<std::size_t>(j)], col, tmp);
        col.swap(tmp);
      }
    }
    u.col(b) = col;
  }
  return canonical_phase(u);
}

void check_clifford_qubits(int q) {
  if (q < 1 || q > kMaxCliffordQubits) {
    throw CapacityError("Clifford elements supported for 1 <= q <= " + std::to_string(kMaxCliffordQubits));
  }
  check_qubit_cap(q, "Clifford element");
}

std::vector<Matrix> closure_generators(int q) {
  const double h = 1.0 / std::sqrt(2.0);
  Matrix had(2, 2);
  had << h, h, h, -h;
  Matrix s(2, 2);
  s << 1, 0, 0, Complex(0, 1);
  if (q == 1) return {had, s};
  const Matrix id = Matrix::Identity(2, 2);
  Matrix cnot = Matrix::Zero(4, 4);
  cnot(0, 0) = cnot(1, 1) = cnot(2, 3) = cnot(3, 2) = 1.0;
  return {kron(had, id), kron(s, id), kron(id, had), kron(id, s), cnot};
}

std::filesystem::path cache_file(const std::filesystem::path& dir, int q) {
  return dir / ("clifford-q" + std::to_string(q) + "-gens-v" + std::to_string(kCliffordGeneratorVersion) + ".json");
}

}  // namespace

BigCount clifford_cardinality(int q) {
  if (q < 1 || q > kMaxCliffordQubits) throw CapacityError("clifford_cardinality: q out of range");
  BigCount n = BigCount(1) << (2 * q + q * q);
  for (int j = 1; j <= q; ++j) n *= (BigCount(1) << (2 * j)) - 1;
  return n;
}

Matrix canonical_phase(const Matrix& u) {
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const Complex a = u(i, 0);
    const double mag = std::abs(a);
    if (mag > 1e-6) return u * (std::conj(a) / mag);
  }
  return u;
}

std::string unitary_key(const Matrix& canonical) {
  std::string key;
  key.reserve(static_cast<std::size_t>(canonical.size()) * 2 * sizeof(long long));
  for (Eigen::Index k = 0; k < canonical.size(); ++k) {
    const long long parts[2] = {std::llround(canonical.data()[k].real() * 1e6),
                                std::llround(canonical.data()[k].imag() * 1e6)};
    key.append(reinterpret_cast<const char*>(parts), sizeof(parts));
  }
  return key;
}

Matrix clifford_unrank(int q, BigCount index) {
  check_clifford_qubits(q);
  if (index >= clifford_cardinality(q)) throw std::out_of_range("clifford_unrank: index out of range");
  std::vector<std::uint64_t> digits;
  for (std::uint64_t r : digit_radices(q)) {
    digits.push_back(static_cast<std::uint64_t>(index % r));
    index /= r;
  }
  return unrank_digits(q, digits);
}

Matrix clifford_sample(int q, Rng& rng) {
  check_clifford_qubits(q);
  std::vector<std::uint64_t> digits;
  for (std::uint64_t r : digit_radices(q)) digits.push_back(rng.uniform_below(r));
  return unrank_digits(q, digits);
}

// ---- UnitaryDesign ------------------------------------------------------------

UnitaryDesign UnitaryDesign::from_list(std::vector<Matrix> elements, std::string id) {
  if (elements.empty()) throw std::invalid_argument("UnitaryDesign: empty element list");
  UnitaryDesign d;
  d.qubits_ = qubits_for_dimension(elements.front().rows());
  if (d.qubits_ < 0) throw DimensionError("UnitaryDesign: dimension is not a power of two");
  for (const Matrix& u : elements) {
    if (u.rows() != elements.front().rows() || !is_unitary(u)) {
      throw InvariantError("UnitaryDesign: element is not a unitary of the common size");
    }
  }
  d.id_ = std::move(id);
  d.cardinality_ = elements.size();
  d.elements_ = std::move(elements);
  d.build_index();
  return d;
}

UnitaryDesign UnitaryDesign::clifford_sampler(int q) {
  check_clifford_qubits(q);
  UnitaryDesign d;
  d.qubits_ = q;
  d.id_ = "clifford-q" + std::to_string(q) + "-tableau";
  d.cardinality_ = clifford_cardinality(q);
  return d;
}

void UnitaryDesign::build_index() {
  lookup_.clear();
  lookup_.reserve(elements_.size());
  for (std::size_t i = 0; i < elements_.size(); ++i) lookup_.emplace(unitary_key(canonical_phase(elements_[i])), i);
}

std::uint64_t UnitaryDesign::size() const {
  if (cardinality_ > BigCount(std::numeric_limits<std::uint64_t>::max())) {
    throw CapacityError("design cardinality exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(cardinality_);
}

Matrix UnitaryDesign::element(std::uint64_t index) const {
  if (enumerated()) {
    if (index >= elements_.size()) throw std::out_of_range("UnitaryDesign::element: index out of range");
    return elements_[index];
  }
  return clifford_unrank(qubits_, index);
}

const std::vector<Matrix>& UnitaryDesign::elements() const {
  if (!enumerated()) throw StateError("UnitaryDesign::elements: design is not enumerated");
  return elements_;
}

Matrix UnitaryDesign::sample(Rng& rng) const {
  if (enumerated()) return elements_[rng.uniform_below(elements_.size())];
  return clifford_sample(qubits_, rng);
}

std::optional<std::uint64_t> UnitaryDesign::find(const Matrix& u) const {
  if (!enumerated()) throw StateError("UnitaryDesign::find: design is not enumerated");
  const auto it = lookup_.find(unitary_key(canonical_phase(u)));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

UnitaryDesign clifford_enumerate(int q, const std::optional<std::filesystem::path>& cache_dir) {
  if (q < 1 || q > kMaxEnumeratedQubits) {
    throw CapacityError("clifford_enumerate supports q in {1, 2}; use the sampler for larger registers");
  }
  const std::string id = "clifford-q" + std::to_string(q) + "-gens-v" + std::to_string(kCliffordGeneratorVersion);
  const auto expected = static_cast<std::size_t>(clifford_cardinality(q));
  if (cache_dir) {
    const auto path = cache_file(*cache_dir, q);
    if (std::filesystem::exists(path)) {
      try {
        std::vector<Matrix> cached = read_matrix_list(path);
        if (cached.size() == expected) return UnitaryDesign::from_list(std::move(cached), id);
      } catch (const std::exception&) {
        // Fall through and rebuild a damaged cache.
      }
    }
  }

  const std::vector<Matrix> gens = closure_generators(q);
  const Eigen::Index dim = Eigen::Index{1} << q;
  std::vector<Matrix> elements{Matrix::Identity(dim, dim)};
  std::unordered_map<std::string, std::size_t> seen{{unitary_key(elements[0]), 0}};
  for (std::size_t head = 0; head < elements.size(); ++head) {
    for (const Matrix& g : gens) {
      Matrix next = canonical_phase(g * elements[head]);
      if (seen.emplace(unitary_key(next), elements.size()).second) elements.push_back(std::move(next));
    }
  }
  if (elements.size() != expected) {
    throw InvariantError("clifford_enumerate: closure produced " + std::to_string(elements.size()) + " elements");
  }
  if (cache_dir) write_matrix_list(cache_file(*cache_dir, q), elements, {{"qubits", q}, {"id", id}});
  return UnitaryDesign::from_list(std::move(elements), id);
}

std::shared_ptr<const UnitaryDesign> shared_clifford(int q) {
  static std::mutex mu;
  static std::shared_ptr<const UnitaryDesign> cache[kMaxCliffordQubits + 1];
  check_clifford_qubits(q);
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[q];
  if (!slot) {
    slot = std::make_shared<const UnitaryDesign>(q <= kMaxEnumeratedQubits ? clifford_enumerate(q)
                                                                           : UnitaryDesign::clifford_sampler(q));
  }
  return slot;
}

// ---- frame potential ------------------------------------------------------------

double frame_potential_exhaustive(const UnitaryDesign& design) {
  const std::vector<Matrix>& els = design.elements();
  const auto n = els.size();
  const double d = static_cast<double>(els.front().rows());
  double off = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ui = kernels::view(els[i]);
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = std::norm(kernels::conj_dot(ui, kernels::view(els[j])));
      row += a * a;
    }
    off += row;
  }
  const double total = static_cast<double>(n) * d * d * d * d + 2.0 * off;
  return total / (static_cast<double>(n) * static_cast<double>(n));
}

double frame_potential_sampled(const UnitaryDesign& design, std::uint64_t pairs, Rng& rng) {
  if (pairs == 0) throw std::invalid_argument("frame_potential_sampled: need at least one pair");
  double acc = 0.0;
  for (std::uint64_t s = 0; s < pairs; ++s) {
    const Matrix u = design.sample(rng);
    const Matrix v = design.sample(rng);
    const double a = std::norm(kernels::conj_dot(kernels::view(u), kernels::view(v)));
    acc += a * a;
  }
  return acc / static_cast<double>(pairs);
}

}  // namespace qcp
