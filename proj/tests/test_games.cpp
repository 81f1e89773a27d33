#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "qcp/games.hpp"
#include "qcp/ssl.hpp"

using namespace qcp;

namespace {

const QasHandle& desk() {
  static const QasHandle s = QasScheme::build(1, 1, 14);
  return s;
}

const QasHandle& tiny(int t) {
  static const QasHandle s1 = QasScheme::build(1, 1, 3);
  static const QasHandle s2 = QasScheme::build(1, 2, 3);
  return t == 1 ? s1 : s2;
}

// Baseline by brute force: one entry per point with its full truth table.
Rational brute_baseline(const ChallengeDistribution& d, const ChallengeFamily& fam) {
  std::vector<BaselineEntry> entries;
  for (std::uint32_t p = 0; p < d.support_size(); ++p) {
    BaselineEntry e;
    e.weight = exact_prob(d, p);
    for (std::uint32_t x = 0; x < d.support_size(); ++x) {
      e.outputs.push_back(x == p ? 1 : 0);
      e.challenge.push_back(x == p ? fam.mass_at_point(d.bits()) : fam.mass_elsewhere(d.bits()));
    }
    entries.push_back(std::move(e));
  }
  return p_triv(entries);
}

}  // namespace

TEST(Baselines, DhalfGivesExactlyOneHalf) {
  for (int bits : {2, 3, 8, 14}) {
    const auto r = ChallengeDistribution::uniform(bits);
    EXPECT_EQ(p_marg(r, ChallengeFamily::dhalf(), ChallengeFamily::dhalf()), Rational(1, 2)) << bits;
    EXPECT_EQ(p_ind(r, ChallengeFamily::dhalf()), Rational(1, 2)) << bits;
  }
}

TEST(Baselines, PointMassCircuitIsFullyKnown) {
  const BitString p(5, 4);
  const auto d = ChallengeDistribution::tr(p, 1.0);
  for (const auto& fam : {ChallengeFamily::dhalf(), ChallengeFamily::uniform(), ChallengeFamily::tr(0.9)}) {
    EXPECT_EQ(p_ind(d, fam), Rational(1));
    EXPECT_EQ(p_marg(d, ChallengeFamily::dhalf(), fam), Rational(1));
  }
}

TEST(Baselines, UniformChallengesAtTwoBits) {
  const auto r = ChallengeDistribution::uniform(2);
  EXPECT_EQ(p_marg(r, ChallengeFamily::dhalf(), ChallengeFamily::uniform()), Rational(3, 4));
  EXPECT_EQ(p_ind(r, ChallengeFamily::uniform()), Rational(3, 4));
}

TEST(Baselines, ClosedFormAgreesWithBruteForceTables) {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int bits = 1 + static_cast<int>(rng.uniform_below(5));
    std::vector<double> w(std::size_t{1} << bits);
    double sum = 0.0;
    for (auto& e : w) sum += (e = rng.uniform01() < 0.3 ? 0.0 : rng.uniform01());
    if (sum == 0.0) continue;
    for (auto& e : w) e /= sum;
    const auto d = ChallengeDistribution::table(bits, w);
    const ChallengeFamily fam = trial % 3 == 0 ? ChallengeFamily::uniform() : ChallengeFamily::tr(rng.uniform01());
    EXPECT_EQ(p_ind(d, fam), brute_baseline(d, fam));
  }
}

TEST(Baselines, CompareFunctionBudget) {
  // CC with a fixed f on 3 bits into 2 bits, y uniform; challenges uniform.
  const FunctionTable f(3, 2, {0, 0, 0, 1, 1, 2, 3, 3});
  std::vector<BaselineEntry> cc;
  for (std::uint32_t y = 0; y < 4; ++y) {
    BaselineEntry e;
    e.weight = Rational(1, 4);
    for (std::uint32_t x = 0; x < 8; ++x) {
      e.outputs.push_back(f.values()[x] == y ? 1 : 0);
      e.challenge.push_back(Rational(1, 8));
    }
    cc.push_back(std::move(e));
  }
  // Point-function side: y uniform, challenges pushed forward through f.
  const ChallengeDistribution z = pushforward(ChallengeDistribution::uniform(3), f);
  std::vector<BaselineEntry> pf;
  for (std::uint32_t y = 0; y < 4; ++y) {
    BaselineEntry e;
    e.weight = Rational(1, 4);
    for (std::uint32_t v = 0; v < 4; ++v) {
      e.outputs.push_back(v == y ? 1 : 0);
      e.challenge.push_back(exact_prob(z, v));
    }
    pf.push_back(std::move(e));
  }
  const Rational cc_val = p_triv(cc);
  const Rational pf_val = p_triv(pf);
  // Challenges hit f-preimages, so both are 3/4 here and eps_f collapses to eps.
  EXPECT_EQ(cc_val, Rational(3, 4));
  EXPECT_EQ(pf_val, Rational(3, 4));
  EXPECT_DOUBLE_EQ(eps_f(cc_val.convert_to<double>(), pf_val.convert_to<double>(), 0.25), 0.25);
}

TEST(Wilson, EdgesAndSymmetry) {
  EXPECT_EQ(wilson_interval(0, 100, 0.99).first, 0.0);
  EXPECT_EQ(wilson_interval(100, 100, 0.99).second, 1.0);
  const auto [lo, hi] = wilson_interval(50, 100, 0.99);
  EXPECT_LT(lo, 0.5);
  EXPECT_GT(hi, 0.5);
  EXPECT_NEAR(0.5 - lo, hi - 0.5, 1e-12);
  // Closed form with z = 2.5758293035489004.
  const double z = 2.5758293035489004, n = 100, p = 0.5;
  const double half = z / (1 + z * z / n) * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  EXPECT_NEAR(hi - lo, 2 * half, 1e-12);
  EXPECT_THROW(wilson_interval(1, 0, 0.99), std::invalid_argument);
  EXPECT_THROW(wilson_interval(3, 2, 0.99), std::invalid_argument);
}

TEST(Oracles, AnalyticAgreesWithExactEnumeration) {
  for (int t : {1, 2}) {
    for (GameKind g : {GameKind::kFree, GameKind::kSsl}) {
      GameSpec spec = GameSpec::standard(g, tiny(t));
      for (double vr : {1.0, 0.5}) {
        spec.verify_r = vr;
        for (const char* name :
             {"trivial-forward", "give-to-charlie", "random-guess", "honest-return", "keep-program", "two-copies",
              "keysearch-0", "keysearch-1"}) {
          const AdversaryHandle adv = make_adversary(name);
          const auto oracle = adv->analytic(spec);
          ASSERT_TRUE(oracle.has_value()) << name;
          EXPECT_NEAR(*oracle, exact_win_probability(spec, *adv), 1e-12) << name << " t=" << t << " " << to_string(g);
        }
      }
    }
  }
}

TEST(Oracles, KeysearchEdgeBudgetsMatchNamedAdversaries) {
  const GameSpec spec = GameSpec::standard(GameKind::kFree, tiny(1));
  EXPECT_NEAR(exact_win_probability(spec, *keysearch(0)), exact_win_probability(spec, *trivial_forward()), 1e-12);
}

TEST(Harness, MonteCarloInsideWilsonIntervalOfOracle) {
  RunOptions opts;
  opts.trials = 10000;
  opts.seed = 31;
  for (GameKind g : {GameKind::kFree, GameKind::kSsl}) {
    const GameSpec spec = GameSpec::standard(g, desk());
    const std::vector<std::string> names = g == GameKind::kFree
                                               ? std::vector<std::string>{"trivial-forward", "give-to-charlie", "two-copies"}
                                               : std::vector<std::string>{"honest-return", "keep-program", "two-copies"};
    for (const auto& name : names) {
      const GameReport r = run_experiment(spec, *make_adversary(name), opts);
      ASSERT_TRUE(r.oracle.has_value());
      EXPECT_LE(r.ci_lo, *r.oracle) << name;
      EXPECT_GE(r.ci_hi, *r.oracle) << name;
    }
  }
}

TEST(Harness, KeepProgramIsGatedByVerification) {
  RunOptions opts;
  opts.trials = 4000;
  opts.seed = 32;
  const QasHandle s = QasScheme::build(1, 2, 8);
  const GameSpec spec = GameSpec::standard(GameKind::kSsl, s);
  const GameReport r = run_experiment(spec, *keep_program(), opts);
  // 2^-t times the honest correctness on the kept program, averaged over points.
  double honest = 0.0;
  for (std::uint32_t p = 0; p < 256; ++p) {
    honest += correctness_exact(*s, BitString(p, 8), ChallengeDistribution::dhalf(BitString(p, 8))) / 256.0;
  }
  EXPECT_NEAR(*r.oracle, 0.25 * honest, 1e-9);
  EXPECT_LE(r.ci_lo, *r.oracle);
  EXPECT_GE(r.ci_hi, *r.oracle);
}

TEST(Harness, ReportIndependentOfThreadCount) {
  const GameSpec spec = GameSpec::standard(GameKind::kFree, desk());
  RunOptions a;
  a.trials = 2000;
  a.seed = 77;
  a.threads = 1;
  RunOptions b = a;
  b.threads = 7;
  for (const char* name : {"cnot-clone", "keysearch-16"}) {
    const auto adv = make_adversary(name);
    EXPECT_EQ(run_experiment(spec, *adv, a).to_json().dump(), run_experiment(spec, *adv, b).to_json().dump()) << name;
  }
  RunOptions c = a;
  c.seed = 78;
  EXPECT_NE(run_experiment(spec, *cnot_clone(), a).to_json().dump(), run_experiment(spec, *cnot_clone(), c).to_json().dump());
}

TEST(Keysearch, DegradesWithBudget) {
  const GameSpec spec = GameSpec::standard(GameKind::kFree, desk());
  RunOptions opts;
  opts.trials = 10000;
  opts.seed = 41;
  double prev = 2.0;
  double first = 0.0;
  for (std::uint32_t budget : {1u, 4u, 16u, 64u}) {
    const GameReport r = run_experiment(spec, *keysearch(budget), opts);
    EXPECT_LE(r.estimate, prev) << budget;
    if (budget == 1) {
      first = r.estimate;
      EXPECT_LE(r.ci_lo, *r.oracle);
      EXPECT_GE(r.ci_hi, *r.oracle);
    }
    prev = r.estimate;
  }
  EXPECT_LE(prev, first - 0.05);
}

TEST(Security, ZooStaysUnderTheoremBounds) {
  RunOptions opts;
  opts.trials = 3000;
  opts.seed = 51;
  for (GameKind g : {GameKind::kFree, GameKind::kSsl}) {
    const GameSpec spec = GameSpec::standard(g, desk());
    for (const auto& name : zoo(g)) {
      const GameReport r = run_experiment(spec, *make_adversary(name), opts);
      EXPECT_LE(r.ci_lo, r.bound) << name;
    }
  }
}

namespace {

class LeakyAdversary final : public Adversary {
 public:
  std::string name() const override { return "leaky"; }
  AdversaryInstance instantiate(const TrialContext& ctx, Rng&) const override {
    const Eigen::Index dy = Eigen::Index{1} << ctx.spec.scheme->y_qubits();
    AdversaryInstance inst;
    inst.kraus.push_back(0.5 * Matrix::Identity(dy, dy));
    inst.measure = [](std::uint32_t, std::size_t) { return Matrix::Zero(1, 1).eval(); };
    return inst;
  }
};

}  // namespace

TEST(Harness, RejectsMalformedInput) {
  const GameSpec spec = GameSpec::standard(GameKind::kFree, tiny(1));
  RunOptions opts;
  opts.trials = 0;
  EXPECT_THROW(run_experiment(spec, *trivial_forward(), opts), std::invalid_argument);
  opts.trials = 10;
  EXPECT_THROW(run_experiment(spec, LeakyAdversary{}, opts), InvariantError);
  EXPECT_THROW(make_adversary("nonsense"), std::invalid_argument);
  EXPECT_THROW(make_adversary("keysearch-"), std::invalid_argument);
  GameSpec bad = spec;
  bad.circuits = ChallengeDistribution::uniform(4);
  EXPECT_THROW(run_experiment(bad, *trivial_forward(), opts), DimensionError);
}

TEST(Reports, JsonAndCsv) {
  const GameSpec spec = GameSpec::standard(GameKind::kSsl, tiny(1));
  RunOptions opts;
  opts.trials = 500;
  opts.seed = 3;
  const GameReport r = run_experiment(spec, *honest_return(), opts);
  const nlohmann::json j = r.to_json();
  EXPECT_EQ(j.at("schema_version"), kGameReportSchemaVersion);
  EXPECT_EQ(j.at("game"), "ssl");
  EXPECT_DOUBLE_EQ(j.at("estimate").get<double>(), static_cast<double>(r.wins) / 500.0);
  EXPECT_GE(r.ci_lo, 0.0);
  EXPECT_LE(r.ci_hi, 1.0);

  const auto path = std::filesystem::temp_directory_path() / "qcp_games_test.csv";
  std::filesystem::remove(path);
  append_csv(path, r);
  append_csv(path, r);
  std::ifstream in(path);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0], csv_header());
  EXPECT_EQ(lines[1], lines[2]);
  EXPECT_EQ(lines[1].rfind("ssl,1,1,3,honest-return,500,", 0), 0u);
  std::filesystem::remove(path);
}
