#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "qcp/ssl.hpp"

using namespace qcp;

namespace {

const QasHandle& small(int t) {
  static const QasHandle s1 = QasScheme::build(1, 1, 3);
  static const QasHandle s2 = QasScheme::build(1, 2, 3);
  return t == 1 ? s1 : s2;
}

BitString pt(std::uint32_t v, int bits = 3) { return BitString(v, bits); }

DensityOperator pure(const Vector& v) { return DensityOperator::assume_positive(v * v.adjoint()); }

}  // namespace

TEST(SslLease, EqualsProtectAndIsDeterministic) {
  const SslScheme ssl = make_ssl_scheme(small(1));
  for (std::uint32_t p = 0; p < 8; ++p) {
    const LeasedProgram a = ssl_lease(ssl, PointFunction{pt(p)});
    const LeasedProgram b = ssl_lease(ssl, PointFunction{pt(p)});
    EXPECT_EQ(a.program().state(), protect(small(1), pt(p)).state());
    EXPECT_EQ(a.program().state(), b.program().state());
    EXPECT_FALSE(a.is_compare());
  }
  EXPECT_THROW(ssl_lease(ssl, PointFunction{pt(1, 4)}), DimensionError);
}

TEST(SslVerify, HonestReturnAcceptsWithCertainty) {
  for (int t : {1, 2}) {
    const SslScheme ssl = make_ssl_scheme(small(t));
    Rng rng(11);
    for (std::uint32_t p = 0; p < 8; ++p) {
      const LeasedProgram prog = ssl_lease(ssl, PointFunction{pt(p)});
      EXPECT_NEAR(ssl_verify_accept_probability(ssl, PointFunction{pt(p)}, pure(prog.program().state())), 1.0, 1e-12);
      for (int i = 0; i < 20; ++i) EXPECT_TRUE(ssl_verify(ssl, PointFunction{pt(p)}, prog.program().state(), rng).accept);
    }
  }
}

TEST(SslVerify, MaximallyMixedAcceptsAtTrapRate) {
  for (int t : {1, 2}) {
    const SslScheme ssl = make_ssl_scheme(small(t));
    const DensityOperator mixed = DensityOperator::maximally_mixed(1 + t);
    const double expect = std::exp2(-t);
    Rng rng(12);
    int acc = 0;
    const int trials = 20000;
    for (int i = 0; i < trials; ++i) acc += ssl_verify(ssl, PointFunction{pt(5)}, mixed, rng).accept ? 1 : 0;
    EXPECT_NEAR(ssl_verify_accept_probability(ssl, PointFunction{pt(5)}, mixed), expect, 1e-12);
    EXPECT_NEAR(acc / double(trials), expect, 4 * 0.5 / std::sqrt(trials));
  }
}

TEST(SslVerify, WrongProgramMatchesDirectTrapSimulation) {
  const QasScheme& s = *small(2);
  const SslScheme ssl = make_ssl_scheme(small(2));
  for (std::uint32_t p = 0; p < 8; ++p) {
    for (std::uint32_t q = 0; q < 8; ++q) {
      if (p == q) continue;
      ASSERT_NE(s.design_index(p), s.design_index(q));
      const Vector wrong = protected_state(s, q);
      // Undo U_p and read the two trap qubits (the low bits of the index).
      const Vector decoded = s.design().element(s.design_index(p)).adjoint() * wrong;
      double clean = 0.0;
      for (Eigen::Index i = 0; i < decoded.size(); ++i) {
        if ((i & 3) == 0) clean += std::norm(decoded(i));
      }
      EXPECT_NEAR(ssl_verify_accept_probability(ssl, PointFunction{pt(p)}, pure(wrong)), clean, 1e-12);
    }
  }
}

TEST(SslVerify, DhalfVerificationIsTheCorrectnessValue) {
  const SslScheme ssl = make_ssl_scheme(small(1), 0.5);
  for (std::uint32_t p = 0; p < 8; ++p) {
    const Vector phi = protected_state(*ssl.base, p);
    EXPECT_NEAR(ssl_verify_accept_probability(ssl, PointFunction{pt(p)}, pure(phi)),
                correctness_exact(*ssl.base, pt(p), ChallengeDistribution::dhalf(pt(p))), 1e-12);
  }
}

TEST(SslEval, AtThePointReturnsOneAndLeavesProgramIntact) {
  const SslScheme ssl = make_ssl_scheme(small(1));
  Rng rng(13);
  for (std::uint32_t p = 0; p < 8; ++p) {
    LeasedProgram prog = ssl_lease(ssl, PointFunction{pt(p)});
    const Vector before = prog.program().state();
    for (int rep = 0; rep < 8; ++rep) EXPECT_EQ(ssl_eval(prog, pt(p), rng), 1);
    EXPECT_LT((prog.program().state() - before).norm(), 1e-12);
  }
}

TEST(SslEval, CorrectnessThroughPreservingBranchesMatchesDestructiveRoute) {
  const QasScheme& s = *small(1);
  for (std::uint32_t p = 0; p < 8; ++p) {
    const Vector phi = protected_state(s, p);
    const ChallengeDistribution d = ChallengeDistribution::dhalf(pt(p));
    double via_branches = 0.0;
    for (std::uint32_t x = 0; x < 8; ++x) {
      const PreservingBranches br = preserving_eval_branches(s, phi, x);
      via_branches += d.prob(x) * br.probability[x == p ? 1 : 0];
    }
    EXPECT_NEAR(via_branches, correctness_exact(s, pt(p), d), 1e-9);
  }
}

// Exact expected verification acceptance after e evaluations at x <- Dhalf(p),
// by expanding every (x, outcome) branch.
TEST(SslEval, RepeatedEvaluationDegradesMonotonicallyAndBoundedly) {
  const SslScheme ssl = make_ssl_scheme(small(1));
  const QasScheme& s = *ssl.base;
  const int max_e = 3;
  for (std::uint32_t p : {0u, 3u, 6u}) {
    const ChallengeDistribution d = ChallengeDistribution::dhalf(pt(p));
    const double eta = 1.0 - correctness_exact(s, pt(p), d);
    std::vector<double> accept(max_e + 1, 0.0);
    std::function<void(const Vector&, double, int)> walk = [&](const Vector& v, double w, int e) {
      accept[static_cast<std::size_t>(e)] += w * eval_accept_probability(s, v, p);
      if (e == max_e) return;
      for (std::uint32_t x = 0; x < 8; ++x) {
        const PreservingBranches br = preserving_eval_branches(s, v, x);
        for (int b = 0; b < 2; ++b) {
          const double pb = br.probability[static_cast<std::size_t>(b)];
          if (pb > 1e-14) walk(br.post_state[static_cast<std::size_t>(b)], w * d.prob(x) * pb, e + 1);
        }
      }
    };
    walk(protected_state(s, p), 1.0, 0);
    EXPECT_NEAR(accept[0], 1.0, 1e-12);
    for (int e = 1; e <= max_e; ++e) {
      EXPECT_LE(accept[static_cast<std::size_t>(e)], accept[static_cast<std::size_t>(e - 1)] + 1e-12);
      const double c = (1.0 - accept[static_cast<std::size_t>(e)]) / (e * eta);
      EXPECT_LE(c, 4.0) << "p=" << p << " e=" << e << " eta=" << eta;
    }
  }
}

TEST(Compare, PayloadEncodesYAndStoresTableVerbatim) {
  const SslScheme ssl = make_ssl_scheme(small(1));
  Rng rng(14);
  const FunctionTable f = FunctionTable::random(5, 3, rng);
  const CompareFunction c{f, pt(6)};
  const LeasedProgram prog = cc_lease(ssl, c);
  EXPECT_TRUE(prog.is_compare());
  EXPECT_EQ(prog.function(), f);
  EXPECT_EQ(prog.program().state(), protected_state(*ssl.base, 6));
  const nlohmann::json j = prog.to_json();
  EXPECT_EQ(j.at("f").at("values").get<std::vector<std::uint32_t>>(), f.values());
  const LeasedProgram back = LeasedProgram::from_json(j, ssl.base);
  EXPECT_EQ(back.function(), f);
  EXPECT_LT((back.program().state() - prog.program().state()).norm(), 1e-15);
}

TEST(Compare, IdentityRecoversPointFunctions) {
  const SslScheme ssl = make_ssl_scheme(small(1));
  for (std::uint32_t y = 0; y < 8; ++y) {
    const CompareFunction c{FunctionTable::identity(3), pt(y)};
    for (std::uint32_t x = 0; x < 8; ++x) EXPECT_EQ(c(pt(x)), PointFunction{pt(y)}(pt(x)));
    EXPECT_EQ(cc_lease(ssl, c).program().state(), ssl_lease(ssl, PointFunction{pt(y)}).program().state());
    Rng r1(99), r2(99);
    const DensityOperator mixed = DensityOperator::maximally_mixed(2);
    for (int i = 0; i < 50; ++i) {
      const VerifyRecord a = cc_verify(ssl, c, mixed, r1);
      const VerifyRecord b = ssl_verify(ssl, PointFunction{pt(y)}, mixed, r2);
      EXPECT_EQ(a.x, b.x);
      EXPECT_EQ(a.accept, b.accept);
    }
  }
}

TEST(Compare, EvalIsPointEvalAtFOfX) {
  const SslScheme ssl = make_ssl_scheme(small(1));
  Rng frng(15);
  const FunctionTable f = FunctionTable::random(4, 3, frng);
  const CompareFunction c{f, pt(2)};
  for (std::uint32_t x = 0; x < 16; ++x) {
    LeasedProgram a = cc_lease(ssl, c);
    LeasedProgram b = ssl_lease(ssl, PointFunction{pt(2)});
    Rng r1(1000 + x), r2(1000 + x);
    for (int rep = 0; rep < 6; ++rep) {
      const int bit = cc_eval(a, BitString(x, 4), r1);
      EXPECT_EQ(bit, ssl_eval(b, f(BitString(x, 4)), r2));
      if (f.values()[x] == 2) EXPECT_EQ(bit, 1);
    }
    EXPECT_LT((a.program().state() - b.program().state()).norm(), 1e-15);
  }
}

TEST(Compare, VerifyRejectsMaximallyMixed) {
  const SslScheme ssl = make_ssl_scheme(small(2));
  Rng rng(16);
  const CompareFunction c{FunctionTable::identity(3), pt(4)};
  const DensityOperator mixed = DensityOperator::maximally_mixed(3);
  int rejects = 0;
  const int trials = 20000;
  for (int i = 0; i < trials; ++i) rejects += cc_verify(ssl, c, mixed, rng).accept ? 0 : 1;
  EXPECT_NEAR(rejects / double(trials), 0.75, 4 * 0.5 / std::sqrt(trials));
}

TEST(Compare, PushforwardMatchesPreimageSums) {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const FunctionTable f = FunctionTable::random(6, 3, rng);
    std::vector<double> w(64);
    double sum = 0.0;
    for (auto& e : w) sum += (e = rng.uniform01());
    for (auto& e : w) e /= sum;
    const ChallengeDistribution d = ChallengeDistribution::table(6, w);
    const ChallengeDistribution pf = pushforward(d, f);
    for (std::uint32_t z = 0; z < 8; ++z) {
      double expect = 0.0;
      for (std::uint32_t x = 0; x < 64; ++x) {
        if (f(BitString(x, 6)).value() == z) expect += d.prob(x);
      }
      EXPECT_NEAR(pf.prob(z), expect, 1e-12);
    }
  }
  // Sampled f(x) agrees with the pushed-forward table.
  const FunctionTable f = FunctionTable::random(4, 2, rng);
  const ChallengeDistribution d = ChallengeDistribution::dhalf(BitString(9, 4));
  const ChallengeDistribution pf = pushforward(d, f);
  std::vector<int> counts(4, 0);
  const int n = 40000;
  for (int i = 0; i < n; ++i) ++counts[f(d.sample(rng)).value()];
  for (std::uint32_t z = 0; z < 4; ++z) EXPECT_NEAR(counts[z] / double(n), pf.prob(z), 0.012);
}

TEST(Transcript, JsonLines) {
  const SslScheme ssl = make_ssl_scheme(small(1));
  Rng rng(18);
  std::ostringstream out;
  const LeasedProgram prog = ssl_lease(ssl, PointFunction{pt(3)});
  for (int i = 0; i < 3; ++i) write_transcript_line(out, ssl_verify(ssl, PointFunction{pt(3)}, prog.program().state(), rng));
  std::istringstream in(out.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    const nlohmann::json j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("x"), "011");
    EXPECT_EQ(j.at("outcome"), 1);
    EXPECT_EQ(j.at("accept"), true);
    ++lines;
  }
  EXPECT_EQ(lines, 3);
}

TEST(EpsF, Calculator) {
  EXPECT_DOUBLE_EQ(eps_f(0.75, 0.5, 0.1), 0.35);
  EXPECT_DOUBLE_EQ(eps_f(0.5, 0.5, 0.2), 0.2);
}
