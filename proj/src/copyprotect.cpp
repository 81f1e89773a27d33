#include "qcp/copyprotect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qcp/kernels/kernels.hpp"
#include "qcp/matrix_json.hpp"

namespace qcp {

namespace {

void require_point_length(const QasScheme& s, const BitString& x) {
  if (x.length() != s.key_bits()) throw DimensionError("point length differs from the scheme's key length");
}

std::uint32_t others_pick(std::uint32_t point, std::uint64_t u) {
  // u-th string of {0,1}^l \ {point}.
  return static_cast<std::uint32_t>(u < point ? u : u + 1);
}

}  // namespace

int PointFunction::operator()(const BitString& x) const {
  if (x.length() != point.length()) throw DimensionError("PointFunction: input length differs");
  return x == point ? 1 : 0;
}

// ---- ChallengeDistribution ------------------------------------------------------

ChallengeDistribution ChallengeDistribution::uniform(int bits) {
  if (bits < 1 || bits > BitString::kMaxLength) throw std::invalid_argument("uniform: bad bit length");
  ChallengeDistribution d;
  d.kind_ = Kind::kUniform;
  d.bits_ = bits;
  return d;
}

ChallengeDistribution ChallengeDistribution::dhalf(const BitString& p) {
  ChallengeDistribution d = tr(p, 0.5);
  d.kind_ = Kind::kDhalf;
  return d;
}

ChallengeDistribution ChallengeDistribution::tr(const BitString& p, double r) {
  if (p.length() < 1) throw std::invalid_argument("tr: empty point");
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("tr: r must lie in [0, 1]");
  ChallengeDistribution d;
  d.kind_ = Kind::kTr;
  d.bits_ = p.length();
  d.point_ = p;
  d.r_ = r;
  return d;
}

ChallengeDistribution ChallengeDistribution::table(int bits, std::vector<double> probs) {
  if (bits < 1 || bits > 20) throw std::invalid_argument("table: bit length must lie in [1, 20]");
  if (probs.size() != (std::size_t{1} << bits)) throw DimensionError("table: size is not 2^bits");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw InvariantError("table: negative or NaN probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw InvariantError("table: probabilities do not sum to 1");
  ChallengeDistribution d;
  d.kind_ = Kind::kTable;
  d.bits_ = bits;
  d.cdf_.resize(probs.size());
  std::partial_sum(probs.begin(), probs.end(), d.cdf_.begin());
  d.table_ = std::move(probs);
  return d;
}

const BitString& ChallengeDistribution::point() const {
  if (kind_ != Kind::kDhalf && kind_ != Kind::kTr) throw StateError("distribution has no distinguished point");
  return point_;
}

double ChallengeDistribution::prob(std::uint32_t x) const {
  if (x >= support_size()) throw std::out_of_range("ChallengeDistribution::prob: x out of range");
  switch (kind_) {
    case Kind::kUniform:
      return 1.0 / static_cast<double>(support_size());
    case Kind::kDhalf:
    case Kind::kTr:
      if (x == point_.value()) return r_;
      return (1.0 - r_) / static_cast<double>(support_size() - 1);
    case Kind::kTable:
      return table_[x];
  }
  return 0.0;
}

std::vector<double> ChallengeDistribution::probabilities() const {
  if (bits_ > 24) throw CapacityError("ChallengeDistribution: support too large to tabulate");
  std::vector<double> out(support_size());
  for (std::uint32_t x = 0; x < support_size(); ++x) out[x] = prob(x);
  return out;
}

BitString ChallengeDistribution::sample(Rng& rng) const {
  switch (kind_) {
    case Kind::kUniform:
      return BitString(static_cast<std::uint32_t>(rng.uniform_below(support_size())), bits_);
    case Kind::kDhalf:
    case Kind::kTr: {
      if (support_size() == 1 || rng.bernoulli(r_)) return point_;
      return BitString(others_pick(point_.value(), rng.uniform_below(support_size() - 1)), bits_);
    }
    case Kind::kTable: {
      const double u = rng.uniform01() * cdf_.back();
      auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      auto idx = static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
      while (table_[idx] == 0.0 && idx > 0) --idx;
      return BitString(idx, bits_);
    }
  }
  throw std::logic_error("unreachable");
}

nlohmann::json ChallengeDistribution::to_json() const {
  switch (kind_) {
    case Kind::kUniform:
      return {{"kind", "uniform"}, {"bits", bits_}};
    case Kind::kDhalf:
      return {{"kind", "dhalf"}, {"bits", bits_}, {"point", point_.value()}};
    case Kind::kTr:
      return {{"kind", "tr"}, {"bits", bits_}, {"point", point_.value()}, {"r", r_}};
    case Kind::kTable:
      return {{"kind", "table"}, {"bits", bits_}, {"probabilities", table_}};
  }
  return {};
}

std::pair<BitString, BitString> sample_pair(const ChallengeDistribution& a, const ChallengeDistribution& b, Rng& rng) {
  BitString first = a.sample(rng);
  BitString second = b.sample(rng);
  return {first, second};
}

// ---- ProtectedProgram -------------------------------------------------------------

ProtectedProgram::ProtectedProgram(QasHandle scheme, Vector state, std::optional<PermParam> mix,
                                   std::shared_ptr<const PairwisePermFamily> family)
    : scheme_(std::move(scheme)), state_(std::move(state)), mix_(mix), family_(std::move(family)) {
  if (!scheme_) throw std::invalid_argument("ProtectedProgram: null scheme");
  if (state_.size() != (Eigen::Index{1} << scheme_->y_qubits())) {
    throw DimensionError("ProtectedProgram: state dimension differs from Y");
  }
  if (std::abs(state_.squaredNorm() - 1.0) > kStructuralTol) throw InvariantError("ProtectedProgram: state not normalized");
  if (mix_.has_value() && !family_) throw std::invalid_argument("ProtectedProgram: mixed program needs a family");
}

const PermParam& ProtectedProgram::mix_param() const {
  if (!mix_) throw StateError("ProtectedProgram: plain program has no permutation parameter");
  return *mix_;
}

const PairwisePermFamily& ProtectedProgram::family() const {
  if (!family_) throw StateError("ProtectedProgram: plain program has no permutation family");
  return *family_;
}

void ProtectedProgram::consume() {
  if (consumed_) throw StateError("ProtectedProgram: program already consumed");
  consumed_ = true;
}

void ProtectedProgram::set_state(Vector state) {
  if (consumed_) throw StateError("ProtectedProgram: program already consumed");
  if (state.size() != state_.size()) throw DimensionError("ProtectedProgram: state dimension differs from Y");
  state_ = std::move(state);
}

nlohmann::json ProtectedProgram::to_json() const {
  nlohmann::json j = {{"scheme", scheme_->to_json()},
                      {"kind", mixed() ? "mixed" : "plain"},
                      {"consumed", consumed_},
                      {"state", vector_to_json(state_)}};
  if (mix_) j["r"] = {mix_->m, mix_->b};
  return j;
}

ProtectedProgram ProtectedProgram::from_json(const nlohmann::json& j, QasHandle scheme) {
  const auto& sj = j.at("scheme");
  if (sj.at("m") != scheme->message_qubits() || sj.at("t") != scheme->trap_qubits() || sj.at("k") != scheme->key_bits()) {
    throw std::invalid_argument("ProtectedProgram::from_json: scheme parameters differ");
  }
  std::optional<PermParam> mix;
  std::shared_ptr<const PairwisePermFamily> family;
  if (j.at("kind") == "mixed") {
    family = std::make_shared<const PairwisePermFamily>(scheme->key_bits());
    mix = family->param(j.at("r").at(0).get<std::uint32_t>(), j.at("r").at(1).get<std::uint32_t>());
  }
  ProtectedProgram prog(std::move(scheme), vector_from_json(j.at("state")), mix, std::move(family));
  if (j.value("consumed", false)) prog.consume();
  return prog;
}

// ---- Protect / Eval ---------------------------------------------------------------

Vector protected_state(const QasScheme& scheme, std::uint64_t p) { return scheme.isometry(p).col(0); }

ProtectedProgram protect(QasHandle scheme, const BitString& p) {
  require_point_length(*scheme, p);
  Vector state = protected_state(*scheme, p.value());
  return ProtectedProgram(std::move(scheme), std::move(state));
}

double eval_accept_probability(const QasScheme& scheme, const Vector& state, std::uint64_t x) {
  const Matrix& a = scheme.verify_isometry(x);
  Vector proj(a.cols());
  kernels::adjoint_matvec(a, kernels::view(state), kernels::view(proj));
  return std::min(1.0, kernels::norm_sq(kernels::view(proj)));
}

namespace {

std::uint64_t effective_key(const ProtectedProgram& program, const BitString& x) {
  require_point_length(program.scheme(), x);
  if (!program.mixed()) return x.value();
  return program.family().apply(program.mix_param(), x.value());
}

}  // namespace

int eval(ProtectedProgram& program, const BitString& x, Rng& rng) {
  const std::uint64_t key = effective_key(program, x);
  program.consume();
  return rng.bernoulli(eval_accept_probability(program.scheme(), program.state(), key)) ? 1 : 0;
}

PreservingBranches preserving_eval_branches(const QasScheme& scheme, const Vector& state, std::uint64_t x) {
  // Register order Y, O, O' (Z is empty); index = y * 4 + o * 2 + o'.
  const Eigen::Index dy = state.size();
  const Matrix u = scheme.verify_unitary(x);
  const std::uint64_t trap_mask = (std::uint64_t{1} << scheme.trap_qubits()) - 1;

  Matrix reg = Matrix::Zero(4, dy);  // row = (o, o'), column = y
  reg.row(0) = state.transpose();

  auto apply_on_y = [&reg](const Matrix& op) { reg = (reg * op.transpose()).eval(); };
  auto mcx_traps_clean = [&reg, dy, trap_mask] {
    for (Eigen::Index y = 0; y < dy; ++y) {
      if ((static_cast<std::uint64_t>(y) & trap_mask) != 0) continue;
      for (int op = 0; op < 2; ++op) std::swap(reg(0 * 2 + op, y), reg(1 * 2 + op, y));
    }
  };

  apply_on_y(u.adjoint());  // W_x = MCX (U^dagger (x) I)
  mcx_traps_clean();
  reg.row(2).swap(reg.row(3));  // CNOT O -> O'
  mcx_traps_clean();            // W_x^dagger = (U (x) I) MCX
  apply_on_y(u);

  PreservingBranches out;
  for (int b = 0; b < 2; ++b) {
    const double leak = reg.row(2 + b).squaredNorm();
    if (leak > 1e-18) throw InvariantError("preserving evaluation left the O register dirty");
    const double p = reg.row(b).squaredNorm();
    out.probability[static_cast<std::size_t>(b)] = p;
    if (p > 1e-12) out.post_state[static_cast<std::size_t>(b)] = reg.row(b).transpose() / std::sqrt(p);
  }
  return out;
}

int eval_preserving(ProtectedProgram& program, const BitString& x, Rng& rng) {
  if (program.consumed()) throw StateError("ProtectedProgram: program already consumed");
  const PreservingBranches br = preserving_eval_branches(program.scheme(), program.state(), effective_key(program, x));
  const double p1 = br.probability[1] / (br.probability[0] + br.probability[1]);
  int bit = rng.bernoulli(p1) ? 1 : 0;
  if (br.post_state[static_cast<std::size_t>(bit)].size() == 0) bit = 1 - bit;
  program.set_state(br.post_state[static_cast<std::size_t>(bit)]);
  return bit;
}

DensityOperator eval_preserving_channel(const ProtectedProgram& program, const BitString& x) {
  if (program.consumed()) throw StateError("ProtectedProgram: program already consumed");
  const PreservingBranches br = preserving_eval_branches(program.scheme(), program.state(), effective_key(program, x));
  const Eigen::Index dy = program.state().size();
  Matrix rho = Matrix::Zero(dy, dy);
  for (int b = 0; b < 2; ++b) {
    const Vector& v = br.post_state[static_cast<std::size_t>(b)];
    if (v.size() != 0) rho.noalias() += br.probability[static_cast<std::size_t>(b)] * (v * v.adjoint());
  }
  rho /= rho.trace().real();
  return DensityOperator::assume_positive(std::move(rho));
}

double correctness_exact(const QasScheme& scheme, const BitString& p, const ChallengeDistribution& dist) {
  require_point_length(scheme, p);
  if (dist.bits() != p.length()) throw DimensionError("correctness_exact: distribution length differs");
  const Vector phi = protected_state(scheme, p.value());
  double total = 0.0;
  for (std::uint32_t x = 0; x < dist.support_size(); ++x) {
    const double w = dist.prob(x);
    if (w == 0.0) continue;
    const double a = eval_accept_probability(scheme, phi, x);
    total += w * (x == p.value() ? a : 1.0 - a);
  }
  return total;
}

double wrong_key_accept_excluding(const QasScheme& scheme, const BitString& p) {
  require_point_length(scheme, p);
  const Vector phi = protected_state(scheme, p.value());
  const double all = (phi.adjoint() * scheme.key_sum_projector() * phi)(0, 0).real();
  const double own = eval_accept_probability(scheme, phi, p.value());
  return (all - own) / static_cast<double>(scheme.key_count() - 1);
}

double reuse_damage(const ProtectedProgram& program, const ChallengeDistribution& dist) {
  if (dist.bits() != program.scheme().key_bits()) throw DimensionError("reuse_damage: distribution length differs");
  const Matrix rho = program.state() * program.state().adjoint();
  double total = 0.0;
  for (std::uint32_t x = 0; x < dist.support_size(); ++x) {
    const double w = dist.prob(x);
    if (w == 0.0) continue;
    total += w * trace_distance(rho, eval_preserving_channel(program, BitString(x, dist.bits())).matrix());
  }
  return total;
}

// ---- MIX ------------------------------------------------------------------------

ProtectedProgram mix_protect(QasHandle scheme, std::shared_ptr<const PairwisePermFamily> family, const BitString& p,
                             Rng& rng, std::optional<PermParam> forced) {
  if (!family || family->bits() != scheme->key_bits()) throw DimensionError("mix_protect: family length differs");
  require_point_length(*scheme, p);
  const PermParam r = forced ? family->param(forced->m, forced->b) : family->sample(rng);
  Vector state = protected_state(*scheme, family->apply(r, p.value()));
  return ProtectedProgram(std::move(scheme), std::move(state), r, std::move(family));
}

int mix_eval(ProtectedProgram& program, const BitString& x, Rng& rng) {
  if (!program.mixed()) throw StateError("mix_eval: program is not mixed");
  return eval(program, x, rng);
}

double mix_correct_probability(const QasScheme& scheme, const PairwisePermFamily& family, const BitString& p,
                               const BitString& x) {
  require_point_length(scheme, p);
  require_point_length(scheme, x);
  if (family.bits() != scheme.key_bits()) throw DimensionError("mix_correct_probability: family length differs");
  double total = 0.0;
  for (std::uint64_t i = 0; i < family.size(); ++i) {
    const PermParam r = family.param_at(i);
    const Vector phi = protected_state(scheme, family.apply(r, p.value()));
    const double a = eval_accept_probability(scheme, phi, family.apply(r, x.value()));
    total += x == p ? a : 1.0 - a;
  }
  return total / static_cast<double>(family.size());
}

}  // namespace qcp
