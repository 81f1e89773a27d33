#include "qcp/suite.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "qcp/copyprotect.hpp"
#include "qcp/designs.hpp"
#include "qcp/games.hpp"
#include "qcp/qas.hpp"

namespace qcp {

namespace {

constexpr int kSuiteSchemaVersion = 1;

const char* const kNames[kSuiteCriteria] = {
    "qas-correctness",        "wrong-key-average",  "two-design-certificate", "pairwise-independence",
    "eps-uniform-map",        "authcp-correctness", "orthogonal-trace-distance", "reusability",
    "mix-worst-case-correctness", "trivial-baselines", "harness-vs-oracles",  "security-sanity",
    "keysearch-degradation",  "determinism",
};

const QasHandle& desk_scheme() {
  static const QasHandle s = QasScheme::build(1, 1, 14);
  return s;
}

CriterionResult make(int id, double measured, double bound, bool pass, nlohmann::json details) {
  CriterionResult r;
  r.id = id;
  r.name = criterion_name(id);
  r.measured = measured;
  r.bound = bound;
  r.pass = pass;
  r.details = std::move(details);
  return r;
}

Matrix flag_one() {
  Matrix f = Matrix::Zero(2, 2);
  f(1, 1) = 1.0;
  return f;
}

// 1. verify(auth(rho)) = rho (x) |Acc><Acc|.
CriterionResult qas_correctness(Rng& rng) {
  double worst = 0.0;
  nlohmann::json per_t = nlohmann::json::object();
  for (int t : {1, 2}) {
    const QasHandle s = t == 1 ? desk_scheme() : QasScheme::build(1, 2, 14);
    double worst_t = 0.0;
    for (int i = 0; i < 200; ++i) {
      const std::uint64_t key = rng.uniform_below(s->key_count());
      for (int j = 0; j < 20; ++j) {
        const DensityOperator rho = random_density(1, rng);
        const DensityOperator out = verify_channel(*s, key, auth(*s, key, rho));
        const double dev = (out.matrix() - kron(rho.matrix(), flag_one())).cwiseAbs().maxCoeff();
        const double acc = std::abs(1.0 - accept_probability(*s, key, auth(*s, key, rho)));
        worst_t = std::max({worst_t, dev, acc});
      }
    }
    per_t["t=" + std::to_string(t)] = worst_t;
    worst = std::max(worst, worst_t);
  }
  return make(1, worst, 1e-9, worst < 1e-9, {{"max_deviation", per_t}, {"keys", 200}, {"states", 20}});
}

// 2. Average acceptance over every design element is 2^-t, and 2^-t <= 2 eps.
CriterionResult wrong_key_average(Rng& rng) {
  const QasScheme& s = *desk_scheme();
  const double expect = std::exp2(-s.trap_qubits());
  double worst = 0.0;
  double largest = 0.0;
  for (int i = 0; i < 20; ++i) {
    const double avg = avg_wrong_key_accept(s, random_density(s.y_qubits(), rng), WrongKeyMode::kDesign);
    worst = std::max(worst, std::abs(avg - expect));
    largest = std::max(largest, avg);
  }
  const double two_eps = 2.0 * s.epsilon();
  const bool pass = worst < 1e-9 && largest <= two_eps;
  return make(2, worst, 1e-9, pass,
              {{"design_size", s.design().size()}, {"expected", expect}, {"max_average", largest}, {"two_epsilon", two_eps}});
}

// 3. Frame potentials.
CriterionResult two_design(Rng& rng) {
  const double fp1 = frame_potential_exhaustive(*shared_clifford(1));
  const double fp2 = frame_potential_sampled(*shared_clifford(2), 1000000, rng);
  std::vector<Matrix> haar;
  for (int i = 0; i < 24; ++i) haar.push_back(haar_unitary(2, rng));
  const double control = frame_potential_exhaustive(UnitaryDesign::from_list(std::move(haar)));
  const bool pass = std::abs(fp1 - 2.0) <= 1e-9 && std::abs(fp2 - 2.0) <= 0.05 && control > 2.1;
  return make(3, std::abs(fp2 - 2.0), 0.05, pass,
              {{"clifford1_exhaustive", fp1},
               {"clifford1_tolerance", 1e-9},
               {"clifford2_sampled", fp2},
               {"clifford2_pairs", 1000000},
               {"haar24_control", control},
               {"control_threshold", 2.1}});
}

// 4. (h_r(x0), h_r(x1)) is uniform over distinct pairs.
CriterionResult pairwise() {
  double worst = 0.0;
  nlohmann::json det = nlohmann::json::object();
  for (int l : {2, 3}) {
    const PairwisePermFamily fam(l);
    const std::uint32_t n = 1U << l;
    const double target = 1.0 / (static_cast<double>(n) * (n - 1));
    std::uint64_t bad = 0;
    for (std::uint32_t x0 = 0; x0 < n; ++x0) {
      for (std::uint32_t x1 = 0; x1 < n; ++x1) {
        if (x0 == x1) continue;
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint64_t> hits;
        for (std::uint64_t i = 0; i < fam.size(); ++i) {
          const PermParam r = fam.param_at(i);
          ++hits[{fam.apply(r, x0), fam.apply(r, x1)}];
        }
        for (std::uint32_t y0 = 0; y0 < n; ++y0) {
          for (std::uint32_t y1 = 0; y1 < n; ++y1) {
            if (y0 == y1) continue;
            const auto it = hits.find({y0, y1});
            const double prob = it == hits.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(fam.size());
            worst = std::max(worst, std::abs(prob - target));
            if (it == hits.end() || it->second != 1) ++bad;
          }
        }
      }
    }
    det["l=" + std::to_string(l)] = {{"family_size", fam.size()}, {"mismatched_pairs", bad}};
  }
  return make(4, worst, 0.0, worst == 0.0, det);
}

// 5. eps' <= |B| / (4 * 2^k), exactly.
CriterionResult eps_uniform(Rng& rng) {
  double worst_ratio = 0.0;
  int violations = 0;
  for (int i = 0; i < 1000; ++i) {
    const int k = 1 + static_cast<int>(rng.uniform_below(16));
    const std::uint64_t b = 1 + rng.uniform_below(std::uint64_t{1} << k);
    const EpsUniformMap map = eps_uniform_build(k, b);
    if (map.epsilon_prime_exact() > map.bound_exact()) ++violations;
    worst_ratio = std::max(worst_ratio, (map.epsilon_prime_exact() / map.bound_exact()).convert_to<double>());
  }
  return make(5, worst_ratio, 1.0, violations == 0, {{"cases", 1000}, {"violations", violations}, {"measure", "max eps'/bound"}});
}

// 6. correctness_exact(p, Dhalf(p)) = 1 - (1/2) * wrong-key average, and >= 1 - eps when eps <= 1/2.
CriterionResult authcp_correctness(Rng& rng) {
  const QasScheme& s = *desk_scheme();
  double worst = 0.0;
  double lowest = 1.0;
  for (int i = 0; i < 50; ++i) {
    const BitString p(static_cast<std::uint32_t>(rng.uniform_below(s.key_count())), s.key_bits());
    const double c = correctness_exact(s, p, ChallengeDistribution::dhalf(p));
    worst = std::max(worst, std::abs(c - (1.0 - 0.5 * wrong_key_accept_excluding(s, p))));
    lowest = std::min(lowest, c);
  }
  const double eps = s.epsilon();
  const bool applicable = eps <= 0.5;
  const bool pass = worst < 1e-9 && (!applicable || lowest >= 1.0 - eps);
  return make(6, worst, 1e-9, pass,
              {{"epsilon", eps},
               {"lower_bound_applicable", applicable},
               {"min_correctness", lowest},
               {"points", 50}});
}

// 7. Trace distance splits over orthogonal blocks.
CriterionResult orthogonal_lemma(Rng& rng) {
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int count = 1 + static_cast<int>(rng.uniform_below(4));
    const Matrix basis = haar_unitary(4, rng);
    Matrix x = Matrix::Zero(16, 16);
    Matrix y = Matrix::Zero(16, 16);
    double sum = 0.0;
    for (int j = 0; j < count; ++j) {
      const Matrix g1 = ginibre(4, 4, rng);
      const Matrix g2 = ginibre(4, 4, rng);
      const Matrix xj = g1 * g1.adjoint() / (g1.squaredNorm() * count);
      const Matrix yj = g2 * g2.adjoint() / (g2.squaredNorm() * count);
      const Matrix pj = basis.col(j) * basis.col(j).adjoint();
      x += kron(pj, xj);
      y += kron(pj, yj);
      sum += trace_distance(xj, yj);
    }
    worst = std::max(worst, std::abs(trace_distance(x, y) - sum));
  }
  return make(7, worst, 1e-8, worst < 1e-8, {{"instances", 100}});
}

// 8. Preserving evaluation at p is harmless; average damage under Dhalf(p) <= 4 eta.
CriterionResult reusability(Rng& rng) {
  const QasHandle& s = desk_scheme();
  double at_point = 0.0;
  double worst_ratio = 0.0;
  double worst_damage = 0.0;
  for (int i = 0; i < 20; ++i) {
    const BitString p(static_cast<std::uint32_t>(rng.uniform_below(s->key_count())), s->key_bits());
    ProtectedProgram prog = protect(s, p);
    const Matrix before = prog.state() * prog.state().adjoint();
    eval_preserving(prog, p, rng);
    at_point = std::max(at_point, trace_distance(before, Matrix(prog.state() * prog.state().adjoint())));
    const ChallengeDistribution d = ChallengeDistribution::dhalf(p);
    const double eta = 1.0 - correctness_exact(*s, p, d);
    const double damage = reuse_damage(prog, d);
    worst_damage = std::max(worst_damage, damage);
    worst_ratio = std::max(worst_ratio, damage / eta);
  }
  const bool pass = at_point < 1e-9 && worst_ratio <= 4.0;
  return make(8, worst_ratio, 4.0, pass,
              {{"max_damage_at_point", at_point}, {"max_damage", worst_damage}, {"measure", "max damage/eta"}, {"points", 20}});
}

// 9. MIX is 2 eta-correct on every (p, x) at l = 2.
CriterionResult mix_correctness() {
  const QasHandle s = QasScheme::build(1, 1, 2);
  const PairwisePermFamily fam(2);
  double eta = 0.0;
  for (std::uint32_t p = 0; p < 4; ++p) {
    const BitString pb(p, 2);
    eta = std::max(eta, 1.0 - correctness_exact(*s, pb, ChallengeDistribution::dhalf(pb)));
  }
  double worst = 0.0;
  for (std::uint32_t p = 0; p < 4; ++p) {
    for (std::uint32_t x = 0; x < 4; ++x) {
      worst = std::max(worst, 1.0 - mix_correct_probability(*s, fam, BitString(p, 2), BitString(x, 2)));
    }
  }
  return make(9, worst, 2.0 * eta, worst <= 2.0 * eta + 1e-12, {{"eta", eta}, {"family_size", fam.size()}});
}

// 10. p^marg and p^ind under Dhalf are exactly 1/2.
CriterionResult baselines() {
  const QasScheme& s = *desk_scheme();
  const auto d = ChallengeDistribution::uniform(s.key_bits());
  const Rational pm = p_marg(d, ChallengeFamily::dhalf(), ChallengeFamily::dhalf());
  const Rational pi = p_ind(d, ChallengeFamily::dhalf());
  const bool pass = pm == Rational(1, 2) && pi == Rational(1, 2);
  const double dev = std::max(std::abs(pm.convert_to<double>() - 0.5), std::abs(pi.convert_to<double>() - 0.5));
  std::ostringstream pms, pis;
  pms << pm;
  pis << pi;
  return make(10, dev, 0.0, pass, {{"p_marg", pms.str()}, {"p_ind", pis.str()}});
}

RunOptions run_options(const SuiteConfig& cfg, std::uint64_t seed) {
  RunOptions o;
  o.trials = cfg.trials;
  o.seed = seed;
  o.threads = cfg.threads;
  return o;
}

nlohmann::json report_summary(const GameReport& r) {
  nlohmann::json j = {{"game", to_string(r.game)}, {"adversary", r.adversary}, {"estimate", r.estimate},
                      {"ci", {r.ci_lo, r.ci_hi}},  {"bound", r.bound},          {"baseline", r.baseline}};
  j["oracle"] = r.oracle ? nlohmann::json(*r.oracle) : nlohmann::json(nullptr);
  return j;
}

// 11. Monte Carlo estimates bracket their analytic values.
CriterionResult harness(const SuiteConfig& cfg, Rng& rng) {
  const std::pair<GameKind, const char*> runs[] = {{GameKind::kFree, "trivial-forward"},
                                                   {GameKind::kFree, "give-to-charlie"},
                                                   {GameKind::kSsl, "honest-return"},
                                                   {GameKind::kSsl, "keep-program"}};
  double worst = 0.0;
  nlohmann::json det = nlohmann::json::array();
  for (const auto& [game, name] : runs) {
    const GameSpec spec = GameSpec::standard(game, desk_scheme());
    const GameReport r = run_experiment(spec, *make_adversary(name), run_options(cfg, rng()));
    const double oracle = r.oracle.value();
    worst = std::max({worst, r.ci_lo - oracle, oracle - r.ci_hi});
    det.push_back(report_summary(r));
  }
  return make(11, worst, 0.0, worst <= 0.0, {{"runs", det}, {"measure", "max distance of oracle outside the 99% interval"}});
}

// 12. No zoo adversary beats its theorem bound beyond CI slack.
CriterionResult security(const SuiteConfig& cfg, Rng& rng) {
  double worst = -1e300;
  double eps = desk_scheme()->epsilon();
  bool vacuous = true;
  nlohmann::json det = nlohmann::json::array();
  for (GameKind game : {GameKind::kFree, GameKind::kSsl}) {
    const GameSpec spec = GameSpec::standard(game, desk_scheme());
    for (const auto& name : zoo(game)) {
      const GameReport r = run_experiment(spec, *make_adversary(name), run_options(cfg, rng()));
      worst = std::max(worst, r.ci_lo - r.bound);
      vacuous = vacuous && r.bound >= 1.0;
      det.push_back(report_summary(r));
    }
  }
  return make(12, worst, 0.0, worst <= 0.0,
              {{"runs", det},
               {"epsilon", eps},
               {"bounds_exceed_one", vacuous},
               {"measure", "max(ci_lo - bound)"},
               {"scope", "falsification over a finite zoo; cannot certify the universal bound"}});
}

// 13. Key search loses as the budget grows.
CriterionResult keysearch_degradation(const SuiteConfig& cfg, Rng& rng) {
  const GameSpec spec = GameSpec::standard(GameKind::kFree, desk_scheme());
  const std::uint64_t seed = rng();
  std::vector<double> est;
  nlohmann::json det = nlohmann::json::array();
  for (std::uint32_t budget : {1u, 4u, 16u, 64u}) {
    const GameReport r = run_experiment(spec, *keysearch(budget), run_options(cfg, seed));
    est.push_back(r.estimate);
    det.push_back({{"budget", budget}, {"estimate", r.estimate}, {"ci", {r.ci_lo, r.ci_hi}}});
  }
  bool monotone = true;
  for (std::size_t i = 1; i < est.size(); ++i) monotone = monotone && est[i] <= est[i - 1];
  const double gap = est.front() - est.back();
  return make(13, gap, 0.05, monotone && gap >= 0.05,
              {{"runs", det}, {"non_increasing", monotone}, {"measure", "lucky-guess estimate minus full-budget estimate (>= bound)"}});
}

CriterionResult run_one(int id, const SuiteConfig& cfg) {
  Rng rng = Rng(cfg.seed).split(static_cast<std::uint64_t>(id));
  switch (id) {
    case 1: return qas_correctness(rng);
    case 2: return wrong_key_average(rng);
    case 3: return two_design(rng);
    case 4: return pairwise();
    case 5: return eps_uniform(rng);
    case 6: return authcp_correctness(rng);
    case 7: return orthogonal_lemma(rng);
    case 8: return reusability(rng);
    case 9: return mix_correctness();
    case 10: return baselines();
    case 11: return harness(cfg, rng);
    case 12: return security(cfg, rng);
    case 13: return keysearch_degradation(cfg, rng);
    default: break;
  }
  throw std::out_of_range("run_criterion: no criterion " + std::to_string(id));
}

std::vector<CriterionResult> run_first_thirteen(const SuiteConfig& cfg) {
  std::vector<CriterionResult> out;
  for (int id = 1; id < kSuiteCriteria; ++id) out.push_back(run_one(id, cfg));
  return out;
}

}  // namespace

CriterionResult determinism_check(const std::vector<CriterionResult>& a, const std::vector<CriterionResult>& b) {
  int differing = 0;
  nlohmann::json names = nlohmann::json::array();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (i >= b.size() || a[i].to_json().dump() != b[i].to_json().dump()) {
      ++differing;
      names.push_back(a[i].name);
    }
  }
  return make(14, differing, 0.0, differing == 0, {{"differing", names}, {"compared", a.size()}});
}

nlohmann::json CriterionResult::to_json() const {
  return {{"id", id}, {"name", name}, {"measured", measured}, {"bound", bound}, {"pass", pass}, {"details", details}};
}

std::string criterion_name(int id) {
  if (id < 1 || id > kSuiteCriteria) throw std::out_of_range("criterion_name: bad id");
  return kNames[id - 1];
}

CriterionResult run_criterion(int id, const SuiteConfig& config) {
  if (id == kSuiteCriteria) return determinism_check(run_first_thirteen(config), run_first_thirteen(config));
  return run_one(id, config);
}

std::vector<CriterionResult> run_suite(const SuiteConfig& config) {
  std::vector<CriterionResult> first = run_first_thirteen(config);
  CriterionResult det = determinism_check(first, run_first_thirteen(config));
  first.push_back(std::move(det));
  return first;
}

nlohmann::json suite_to_json(const std::vector<CriterionResult>& results, const SuiteConfig& config) {
  nlohmann::json arr = nlohmann::json::array();
  bool all = true;
  for (const auto& r : results) {
    arr.push_back(r.to_json());
    all = all && r.pass;
  }
  return {{"schema_version", kSuiteSchemaVersion},
          {"seed", config.seed},
          {"trials", config.trials},
          {"criteria", arr},
          {"pass", all}};
}

}  // namespace qcp
