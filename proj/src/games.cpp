#include "qcp/games.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

#include <boost/math/distributions/normal.hpp>

namespace qcp {

namespace {

using RowMajor = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Rational pow2(int bits) { return Rational(BigCount(1) << bits); }

double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace

// ---- ChallengeFamily ----------------------------------------------------------------

ChallengeFamily ChallengeFamily::dhalf() { return tr(0.5); }

ChallengeFamily ChallengeFamily::tr(double r) {
  if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("ChallengeFamily: r must lie in [0, 1]");
  ChallengeFamily f;
  f.r_ = r;
  f.r_exact_ = Rational(r);
  return f;
}

ChallengeFamily ChallengeFamily::uniform() {
  ChallengeFamily f;
  f.uniform_ = true;
  return f;
}

Rational ChallengeFamily::mass_at_point(int bits) const { return uniform_ ? Rational(1) / pow2(bits) : r_exact_; }

Rational ChallengeFamily::mass_elsewhere(int bits) const {
  if (uniform_) return Rational(1) / pow2(bits);
  return (Rational(1) - r_exact_) / (pow2(bits) - 1);
}

double ChallengeFamily::mass_at_point_double(int bits) const { return uniform_ ? std::exp2(-bits) : r_; }

ChallengeDistribution ChallengeFamily::at(const BitString& p) const {
  return ChallengeDistribution::tr(p, mass_at_point_double(p.length()));
}

nlohmann::json ChallengeFamily::to_json() const {
  if (uniform_) return {{"kind", "uniform"}};
  return {{"kind", "tr"}, {"r", r_}};
}

ChallengeFamily ChallengeFamily::from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "uniform") return uniform();
  if (kind == "dhalf") return dhalf();
  if (kind == "tr") return tr(j.at("r").get<double>());
  throw std::invalid_argument("ChallengeFamily: unknown kind '" + kind + "'");
}

// ---- baselines ------------------------------------------------------------------------

Rational exact_prob(const ChallengeDistribution& d, std::uint32_t x) {
  if (x >= d.support_size()) throw std::out_of_range("exact_prob: x out of range");
  switch (d.kind()) {
    case ChallengeDistribution::Kind::kUniform:
      return Rational(1) / pow2(d.bits());
    case ChallengeDistribution::Kind::kDhalf:
    case ChallengeDistribution::Kind::kTr: {
      const Rational r(d.mass_at_point());
      if (x == d.point().value()) return r;
      return (Rational(1) - r) / (pow2(d.bits()) - 1);
    }
    case ChallengeDistribution::Kind::kTable:
      return Rational(d.prob(x));
  }
  throw std::logic_error("unreachable");
}

Rational p_triv(const std::vector<BaselineEntry>& circuits) {
  if (circuits.empty()) throw std::invalid_argument("p_triv: no circuits");
  const std::size_t n = circuits.front().outputs.size();
  for (const auto& c : circuits) {
    if (c.outputs.size() != n || c.challenge.size() != n) throw DimensionError("p_triv: table sizes differ");
  }
  Rational total = 0;
  Rational best = 0;
  for (std::size_t x = 0; x < n; ++x) {
    Rational w[2] = {0, 0};
    for (const auto& c : circuits) w[c.outputs[x] != 0 ? 1 : 0] += c.weight * c.challenge[x];
    total += w[0] + w[1];
    best += w[1] > w[0] ? w[1] : w[0];
  }
  if (total == 0) throw InvariantError("p_triv: zero total mass");
  return best / total;
}

Rational p_ind(const ChallengeDistribution& circuits, const ChallengeFamily& family) {
  const int bits = circuits.bits();
  const Rational at = family.mass_at_point(bits);
  const Rational elsewhere = family.mass_elsewhere(bits);
  std::vector<Rational> d(circuits.support_size());
  Rational total = 0;
  for (std::uint32_t x = 0; x < d.size(); ++x) total += (d[x] = exact_prob(circuits, x));
  // Given challenge x, C(x) = 1 only for the circuit p = x; every other point
  // puts the same mass `elsewhere` on x.
  Rational best = 0;
  for (std::uint32_t x = 0; x < d.size(); ++x) {
    const Rational one = d[x] * at;
    const Rational zero = (total - d[x]) * elsewhere;
    best += one > zero ? one : zero;
  }
  return best / total;
}

Rational p_marg(const ChallengeDistribution& circuits, const ChallengeFamily& /*bob*/, const ChallengeFamily& charlie) {
  return p_ind(circuits, charlie);
}

// ---- specs ------------------------------------------------------------------------

std::string to_string(GameKind g) { return g == GameKind::kFree ? "free" : "ssl"; }

GameKind game_kind_from_string(const std::string& s) {
  if (s == "free" || s == "cp") return GameKind::kFree;
  if (s == "ssl") return GameKind::kSsl;
  throw std::invalid_argument("unknown game '" + s + "'");
}

GameSpec GameSpec::standard(GameKind game, QasHandle scheme) {
  GameSpec spec;
  spec.game = game;
  spec.circuits = ChallengeDistribution::uniform(scheme->key_bits());
  spec.scheme = std::move(scheme);
  return spec;
}

nlohmann::json GameSpec::to_json() const {
  nlohmann::json j = {{"game", to_string(game)},
                      {"scheme", scheme->to_json()},
                      {"circuits", circuits.to_json()},
                      {"challenge", challenge.to_json()}};
  if (game == GameKind::kFree) {
    j["bob"] = bob.to_json();
  } else {
    j["verify_r"] = verify_r;
  }
  return j;
}

namespace {

void check_spec(const GameSpec& spec) {
  if (!spec.scheme) throw std::invalid_argument("GameSpec: null scheme");
  if (spec.circuits.bits() != spec.scheme->key_bits()) throw DimensionError("GameSpec: circuit length differs from k");
  if (!(spec.verify_r >= 0.0 && spec.verify_r <= 1.0)) throw std::invalid_argument("GameSpec: verify_r outside [0, 1]");
}

}  // namespace

double game_baseline(const GameSpec& spec) {
  check_spec(spec);
  if (spec.game == GameKind::kFree) return to_double(p_marg(spec.circuits, spec.bob, spec.challenge));
  return to_double(p_ind(spec.circuits, spec.challenge));
}

double game_bound(const GameSpec& spec) {
  const double eps = spec.scheme->epsilon();
  if (spec.game == GameKind::kFree) return game_baseline(spec) + 1.5 * eps + std::sqrt(2.0 * eps);
  return game_baseline(spec) + eps;
}

// ---- analytic pieces ----------------------------------------------------------------

namespace {

// Pr[honest destructive eval on Protect(p) is right] for x <- T^(r)_p.
double honest_correct(const QasScheme& s, std::uint32_t p, double r_at_point) {
  const Vector phi = protected_state(s, p);
  const double own = eval_accept_probability(s, phi, p);
  const double wrong = wrong_key_accept_excluding(s, BitString(p, s.key_bits()));
  return r_at_point * own + (1.0 - r_at_point) * (1.0 - wrong);
}

// Same on the maximally mixed state, which every key accepts with probability 2^-t.
double mixed_correct(const QasScheme& s, double r_at_point) {
  const double a = std::exp2(-s.trap_qubits());
  return r_at_point * a + (1.0 - r_at_point) * (1.0 - a);
}

double mean_over_points(const GameSpec& spec, const std::function<double(std::uint32_t)>& f) {
  double total = 0.0;
  for (std::uint32_t p = 0; p < spec.circuits.support_size(); ++p) {
    const double w = spec.circuits.prob(p);
    if (w > 0.0) total += w * f(p);
  }
  return total;
}

// The first factor is Bob's evaluation in the free game and the lessor's
// verification in the SSL game; both are the honest destructive evaluation.
double first_r(const GameSpec& spec) {
  return spec.game == GameKind::kFree ? spec.bob.mass_at_point_double(spec.scheme->key_bits()) : spec.verify_r;
}

double challenge_r(const GameSpec& spec) { return spec.challenge.mass_at_point_double(spec.scheme->key_bits()); }

Matrix ket_column(const Vector& v) { return v; }

Matrix projector_on_one() {
  Matrix p = Matrix::Zero(2, 2);
  p(1, 1) = 1.0;
  return p;
}

Matrix honest_projector(const QasScheme& s, std::uint32_t x) {
  const Matrix& a = s.verify_isometry(x);
  return a * a.adjoint();
}

// ---- the zoo ----------------------------------------------------------------------

enum class Shape {
  kForwardZero,    // Y kept, side |0>, answer 0
  kMixedAndSide,   // Y gets I/d, side gets the program, honest eval on side
  kCnotClone,      // |y> -> |y>|y>, honest eval on side
  kRandomGuess,    // side |+>, computational-basis measurement
  kTwoCopies,      // side gets a fresh honest program
};

class ShapeAdversary final : public Adversary {
 public:
  ShapeAdversary(std::string name, Shape shape) : name_(std::move(name)), shape_(shape) {}

  std::string name() const override { return name_; }

  AdversaryInstance instantiate(const TrialContext& ctx, Rng& /*rng*/) const override {
    const QasScheme& s = *ctx.spec.scheme;
    const Eigen::Index dy = Eigen::Index{1} << s.y_qubits();
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(dy));
    AdversaryInstance inst;
    const QasHandle scheme = ctx.spec.scheme;
    auto honest = [scheme](std::uint32_t x, std::size_t) { return honest_projector(*scheme, x); };
    switch (shape_) {
      case Shape::kForwardZero: {
        inst.kraus.push_back(kron(Matrix::Identity(dy, dy), ket_column(Vector::Unit(2, 0))));
        inst.side_qubits = 1;
        inst.measure = [](std::uint32_t, std::size_t) { return projector_on_one(); };
        break;
      }
      case Shape::kRandomGuess: {
        inst.kraus.push_back(kron(Matrix::Identity(dy, dy), ket_column(Vector::Constant(2, std::sqrt(0.5)))));
        inst.side_qubits = 1;
        inst.measure = [](std::uint32_t, std::size_t) { return projector_on_one(); };
        break;
      }
      case Shape::kMixedAndSide: {
        for (Eigen::Index i = 0; i < dy; ++i) {
          Matrix k = Matrix::Zero(dy * dy, dy);
          for (Eigen::Index c = 0; c < dy; ++c) k(i * dy + c, c) = inv_sqrt_d;
          inst.kraus.push_back(std::move(k));
        }
        inst.side_qubits = s.y_qubits();
        inst.measure = honest;
        break;
      }
      case Shape::kCnotClone: {
        Matrix k = Matrix::Zero(dy * dy, dy);
        for (Eigen::Index y = 0; y < dy; ++y) k(y * dy + y, y) = 1.0;
        inst.kraus.push_back(std::move(k));
        inst.side_qubits = s.y_qubits();
        inst.measure = honest;
        break;
      }
      case Shape::kTwoCopies: {
        inst.kraus.push_back(kron(Matrix::Identity(dy, dy), ket_column(protected_state(s, ctx.point.value()))));
        inst.side_qubits = s.y_qubits();
        inst.measure = honest;
        break;
      }
    }
    return inst;
  }

  std::optional<double> analytic(const GameSpec& spec) const override {
    const QasScheme& s = *spec.scheme;
    if (s.corrupted() || s.key_bits() > 20) return std::nullopt;
    const double rf = first_r(spec);
    const double rc = challenge_r(spec);
    switch (shape_) {
      case Shape::kForwardZero:
        return mean_over_points(spec, [&](std::uint32_t p) { return honest_correct(s, p, rf); }) * (1.0 - rc);
      case Shape::kRandomGuess:
        return mean_over_points(spec, [&](std::uint32_t p) { return honest_correct(s, p, rf); }) * 0.5;
      case Shape::kMixedAndSide:
        return mixed_correct(s, rf) * mean_over_points(spec, [&](std::uint32_t p) { return honest_correct(s, p, rc); });
      case Shape::kTwoCopies:
        return mean_over_points(spec,
                                [&](std::uint32_t p) { return honest_correct(s, p, rf) * honest_correct(s, p, rc); });
      case Shape::kCnotClone:
        return std::nullopt;
    }
    return std::nullopt;
  }

 private:
  std::string name_;
  Shape shape_;
};

class KeysearchAdversary final : public Adversary {
 public:
  explicit KeysearchAdversary(std::uint32_t budget) : budget_(budget) {}

  std::string name() const override { return "keysearch-" + std::to_string(budget_); }
  bool deterministic() const override { return budget_ <= 1; }

  AdversaryInstance instantiate(const TrialContext& ctx, Rng& rng) const override {
    const QasScheme& s = *ctx.spec.scheme;
    const std::uint32_t p = ctx.point.value();
    if (budget_ > s.key_count()) throw std::invalid_argument("keysearch: budget exceeds the key space");

    std::vector<std::uint32_t> keys;
    keys.reserve(budget_);
    while (keys.size() + 1 < budget_) {
      const auto k = static_cast<std::uint32_t>(rng.uniform_below(s.key_count()));
      if (k != p && std::find(keys.begin(), keys.end(), k) == keys.end()) keys.push_back(k);
    }
    if (budget_ > 0) keys.insert(keys.begin() + static_cast<std::ptrdiff_t>(rng.uniform_below(budget_)), p);

    const Eigen::Index dy = Eigen::Index{1} << s.y_qubits();
    AdversaryInstance inst;
    Matrix none = Matrix::Identity(dy, dy);  // product of the rejections so far
    for (std::uint32_t key : keys) {
      const Matrix& a = s.isometry(key);
      const Matrix pi = a * a.adjoint();
      inst.kraus.push_back(pi * none);
      none = ((Matrix::Identity(dy, dy) - pi) * none).eval();
    }
    inst.kraus.push_back(std::move(none));
    inst.side_qubits = 0;
    inst.measure = [keys](std::uint32_t x, std::size_t branch) {
      Matrix out = Matrix::Zero(1, 1);
      if (branch < keys.size() && keys[branch] == x) out(0, 0) = 1.0;
      return out;
    };
    return inst;
  }

  std::optional<double> analytic(const GameSpec& spec) const override {
    const QasScheme& s = *spec.scheme;
    if (budget_ > 1 || s.corrupted() || s.key_bits() > 20) return std::nullopt;
    const double rf = first_r(spec);
    const double rc = challenge_r(spec);
    const double first = mean_over_points(spec, [&](std::uint32_t p) { return honest_correct(s, p, rf); });
    // Budget {p}: the only key accepts without disturbing Y and Charlie knows p.
    // Empty budget: Charlie answers 0.
    return budget_ == 1 ? first : first * (1.0 - rc);
  }

 private:
  std::uint32_t budget_;
};

}  // namespace

AdversaryHandle trivial_forward() { return std::make_shared<ShapeAdversary>("trivial-forward", Shape::kForwardZero); }
AdversaryHandle give_to_charlie() { return std::make_shared<ShapeAdversary>("give-to-charlie", Shape::kMixedAndSide); }
AdversaryHandle cnot_clone() { return std::make_shared<ShapeAdversary>("cnot-clone", Shape::kCnotClone); }
AdversaryHandle random_guess() { return std::make_shared<ShapeAdversary>("random-guess", Shape::kRandomGuess); }
AdversaryHandle honest_return() { return std::make_shared<ShapeAdversary>("honest-return", Shape::kForwardZero); }
AdversaryHandle keep_program() { return std::make_shared<ShapeAdversary>("keep-program", Shape::kMixedAndSide); }
AdversaryHandle two_copies() { return std::make_shared<ShapeAdversary>("two-copies", Shape::kTwoCopies); }
AdversaryHandle keysearch(std::uint32_t budget) { return std::make_shared<KeysearchAdversary>(budget); }

AdversaryHandle make_adversary(const std::string& name) {
  if (name == "trivial-forward") return trivial_forward();
  if (name == "give-to-charlie") return give_to_charlie();
  if (name == "cnot-clone") return cnot_clone();
  if (name == "random-guess") return random_guess();
  if (name == "honest-return") return honest_return();
  if (name == "keep-program") return keep_program();
  if (name == "two-copies") return two_copies();
  const std::string prefix = "keysearch-";
  if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size()) {
    const std::string digits = name.substr(prefix.size());
    if (digits.size() <= 9 && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) {
      return keysearch(static_cast<std::uint32_t>(std::stoul(digits)));
    }
  }
  throw std::invalid_argument("unknown adversary '" + name + "'");
}

std::vector<std::string> zoo(GameKind game) {
  if (game == GameKind::kFree) return {"trivial-forward", "give-to-charlie", "cnot-clone", "random-guess", "keysearch-16"};
  return {"honest-return", "keep-program", "cnot-clone", "random-guess"};
}

// ---- statistics -----------------------------------------------------------------------

std::pair<double, double> wilson_interval(std::uint64_t wins, std::uint64_t trials, double confidence) {
  if (trials == 0) throw std::invalid_argument("wilson_interval: zero trials");
  if (wins > trials) throw std::invalid_argument("wilson_interval: wins exceed trials");
  if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("wilson_interval: confidence outside (0, 1)");
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 1.0 - (1.0 - confidence) / 2.0);
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(wins) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  const double lo = wins == 0 ? 0.0 : std::max(0.0, center - half);
  const double hi = wins == trials ? 1.0 : std::min(1.0, center + half);
  return {lo, hi};
}

// ---- trials ---------------------------------------------------------------------------

namespace {

void check_instance(const AdversaryInstance& inst, Eigen::Index dy) {
  if (inst.kraus.empty()) throw InvariantError("adversary: no Kraus operators");
  if (!inst.measure) throw InvariantError("adversary: no measurement");
  check_qubit_cap(qubits_for_dimension(dy) + inst.side_qubits, "adversary output");
  const Eigen::Index rows = dy << inst.side_qubits;
  Matrix sum = Matrix::Zero(dy, dy);
  for (const Matrix& k : inst.kraus) {
    if (k.rows() != rows || k.cols() != dy) throw DimensionError("adversary: Kraus operator shape differs from Y -> Y (x) side");
    sum.noalias() += k.adjoint() * k;
  }
  if ((sum - Matrix::Identity(dy, dy)).cwiseAbs().maxCoeff() > kStructuralTol) {
    throw InvariantError("adversary: channel is not trace preserving");
  }
}

Matrix checked_projector(const AdversaryInstance& inst, std::uint32_t x, std::size_t branch) {
  Matrix pi = inst.measure(x, branch);
  const Eigen::Index ds = Eigen::Index{1} << inst.side_qubits;
  if (pi.rows() != ds || pi.cols() != ds) throw DimensionError("adversary: projector shape differs from the side register");
  if (!is_projector(pi)) throw InvariantError("adversary: measurement is not a projector");
  return pi;
}

Matrix as_joint(const Vector& v, Eigen::Index dy, Eigen::Index ds) {
  return Eigen::Map<const RowMajor>(v.data(), dy, ds);
}

// Honest destructive evaluation with key x on Y of the joint state; collapses
// `psi` and returns the output bit.
int honest_eval_on_y(const QasScheme& s, std::uint32_t x, Matrix& psi, Rng& rng) {
  const Matrix& a = s.verify_isometry(x);
  const Matrix proj = a.adjoint() * psi;
  const double p1 = std::clamp(proj.squaredNorm(), 0.0, 1.0);
  const int bit = rng.bernoulli(p1) ? 1 : 0;
  if (bit == 1) {
    psi = a * proj / std::sqrt(p1);
  } else {
    psi -= a * proj;
    psi /= std::sqrt(std::max(1.0 - p1, 1e-300));
  }
  return bit;
}

bool run_trial(const GameSpec& spec, const Adversary& adversary, std::uint64_t trial, Rng rng) {
  const QasScheme& s = *spec.scheme;
  const Eigen::Index dy = Eigen::Index{1} << s.y_qubits();

  const BitString p = spec.circuits.sample(rng);
  const Vector program = protected_state(s, p.value());
  const AdversaryInstance inst = adversary.instantiate(TrialContext{spec, p, trial}, rng);
  check_instance(inst, dy);
  const Eigen::Index ds = Eigen::Index{1} << inst.side_qubits;

  // Draw the Kraus branch.
  std::vector<Vector> outs;
  std::vector<double> weights;
  outs.reserve(inst.kraus.size());
  for (const Matrix& k : inst.kraus) {
    outs.push_back(k * program);
    weights.push_back(outs.back().squaredNorm());
  }
  double u = rng.uniform01();
  std::size_t branch = outs.size();
  for (std::size_t j = 0; j < outs.size(); ++j) {
    if (weights[j] <= 0.0) continue;
    branch = j;
    if (u < weights[j]) break;
    u -= weights[j];
  }
  Matrix psi = as_joint(outs[branch], dy, ds) / std::sqrt(weights[branch]);

  bool first_ok = false;
  if (spec.game == GameKind::kFree) {
    const BitString x1 = spec.bob.at(p).sample(rng);
    first_ok = honest_eval_on_y(s, x1.value(), psi, rng) == (x1 == p ? 1 : 0);
  } else {
    const BitString xv = ChallengeDistribution::tr(p, spec.verify_r).sample(rng);
    first_ok = honest_eval_on_y(s, xv.value(), psi, rng) == (xv == p ? 1 : 0);
  }

  const BitString x2 = spec.challenge.at(p).sample(rng);
  const Matrix pi = checked_projector(inst, x2.value(), branch);
  const double q1 = std::clamp((psi * pi.transpose()).squaredNorm(), 0.0, 1.0);
  const int answer = rng.bernoulli(q1) ? 1 : 0;
  return first_ok && answer == (x2 == p ? 1 : 0);
}

}  // namespace

GameReport run_experiment(const GameSpec& spec, const Adversary& adversary, const RunOptions& opts) {
  check_spec(spec);
  if (opts.trials == 0) throw std::invalid_argument("run_experiment: zero trials");

  const Rng master(opts.seed);
  unsigned workers = opts.threads != 0 ? opts.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, opts.trials));

  std::vector<std::uint64_t> wins(workers, 0);
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned w) {
    try {
      for (std::uint64_t i = w; i < opts.trials; i += workers) {
        if (run_trial(spec, adversary, i, master.split(i))) ++wins[w];
      }
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  GameReport r;
  r.game = spec.game;
  r.m = spec.scheme->message_qubits();
  r.t = spec.scheme->trap_qubits();
  r.k = spec.scheme->key_bits();
  r.adversary = adversary.name();
  r.trials = opts.trials;
  for (std::uint64_t w : wins) r.wins += w;
  r.estimate = static_cast<double>(r.wins) / static_cast<double>(r.trials);
  r.confidence = opts.confidence;
  std::tie(r.ci_lo, r.ci_hi) = wilson_interval(r.wins, r.trials, opts.confidence);
  r.baseline = game_baseline(spec);
  r.bound = game_bound(spec);
  r.oracle = adversary.analytic(spec);
  r.seed = opts.seed;
  r.parameters = spec.to_json();
  return r;
}

// ---- exact evaluation -----------------------------------------------------------------

double exact_trial_win(const GameSpec& spec, const BitString& p, const AdversaryInstance& inst) {
  check_spec(spec);
  const QasScheme& s = *spec.scheme;
  const int bits = s.key_bits();
  if (bits > 12) throw CapacityError("exact_trial_win: challenge space too large to enumerate");
  const Eigen::Index dy = Eigen::Index{1} << s.y_qubits();
  check_instance(inst, dy);
  const Eigen::Index ds = Eigen::Index{1} << inst.side_qubits;

  // Operator that is "right" for the first evaluation, averaged over its challenge.
  const ChallengeDistribution first =
      spec.game == GameKind::kFree ? spec.bob.at(p) : ChallengeDistribution::tr(p, spec.verify_r);
  const ChallengeDistribution second = spec.challenge.at(p);
  Matrix e_first = Matrix::Zero(dy, dy);
  for (std::uint32_t x = 0; x < first.support_size(); ++x) {
    const double w = first.prob(x);
    if (w == 0.0) continue;
    const Matrix pi = honest_projector(s, x);
    e_first += w * (x == p.value() ? pi : Matrix(Matrix::Identity(dy, dy) - pi));
  }

  const Vector program = protected_state(s, p.value());
  double total = 0.0;
  for (std::size_t j = 0; j < inst.kraus.size(); ++j) {
    const Matrix psi = as_joint(inst.kraus[j] * program, dy, ds);
    if (psi.squaredNorm() == 0.0) continue;
    Matrix e_second = Matrix::Zero(ds, ds);
    for (std::uint32_t x = 0; x < second.support_size(); ++x) {
      const double w = second.prob(x);
      if (w == 0.0) continue;
      const Matrix pi = checked_projector(inst, x, j);
      e_second += w * (x == p.value() ? pi : Matrix(Matrix::Identity(ds, ds) - pi));
    }
    const Matrix m = e_first * psi * e_second.transpose();
    total += psi.conjugate().cwiseProduct(m).sum().real();
  }
  return total;
}

double exact_win_probability(const GameSpec& spec, const Adversary& adversary) {
  if (!adversary.deterministic()) throw std::invalid_argument("exact_win_probability: adversary is randomized");
  Rng unused(0);
  double total = 0.0;
  for (std::uint32_t p = 0; p < spec.circuits.support_size(); ++p) {
    const double w = spec.circuits.prob(p);
    if (w == 0.0) continue;
    const BitString pb(p, spec.circuits.bits());
    total += w * exact_trial_win(spec, pb, adversary.instantiate(TrialContext{spec, pb, 0}, unused));
  }
  return total;
}

// ---- reports --------------------------------------------------------------------------

nlohmann::json GameReport::to_json() const {
  return {{"schema_version", kGameReportSchemaVersion},
          {"game", to_string(game)},
          {"scheme", {{"m", m}, {"t", t}, {"k", k}}},
          {"adversary", adversary},
          {"trials", trials},
          {"wins", wins},
          {"estimate", estimate},
          {"confidence", confidence},
          {"ci", {ci_lo, ci_hi}},
          {"baseline", baseline},
          {"bound", bound},
          {"oracle", oracle ? nlohmann::json(*oracle) : nlohmann::json(nullptr)},
          {"seed", seed},
          {"parameters", parameters}};
}

std::string csv_header() {
  return "game,m,t,k,adversary,trials,wins,estimate,ci_lo,ci_hi,baseline,bound,seed,schema_version";
}

std::string csv_row(const GameReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%s,%llu,%llu,%.12g,%.12g,%.12g,%.12g,%.12g,%llu,%d", to_string(r.game).c_str(),
                r.m, r.t, r.k, r.adversary.c_str(), static_cast<unsigned long long>(r.trials),
                static_cast<unsigned long long>(r.wins), r.estimate, r.ci_lo, r.ci_hi, r.baseline, r.bound,
                static_cast<unsigned long long>(r.seed), kGameReportSchemaVersion);
  return buf;
}

void append_csv(const std::filesystem::path& path, const GameReport& report) {
  std::error_code ec;
  const bool fresh = !std::filesystem::exists(path, ec) || std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, std::ios::app);
  if (!out) throw std::runtime_error("append_csv: cannot open " + path.string());
  if (fresh) out << csv_header() << '\n';
  out << csv_row(report) << '\n';
  if (!out) throw std::runtime_error("append_csv: write failed for " + path.string());
}

}  // namespace qcp
