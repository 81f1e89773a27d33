#include <gtest/gtest.h>

#include <cmath>

#include "qcp/qas.hpp"

using namespace qcp;

namespace {

const QasHandle& desk_scheme() {
  static const QasHandle s = QasScheme::build(1, 1, 14);
  return s;
}

// A from the design element directly: columns of U at message index i << t.
Matrix oracle_isometry(const QasScheme& s, std::uint64_t key) {
  const Matrix u = s.design().element(key % s.design().size());
  Matrix a(u.rows(), Eigen::Index{1} << s.message_qubits());
  for (Eigen::Index i = 0; i < a.cols(); ++i) a.col(i) = u.col(i << s.trap_qubits());
  return a;
}

// Decode with U^dagger, then keep the block where the trap register reads 0.
double oracle_accept(const QasScheme& s, std::uint64_t key, const Matrix& rho) {
  const Matrix u = s.design().element(key % s.design().size());
  const Matrix dec = u.adjoint() * rho * u;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < (Eigen::Index{1} << s.message_qubits()); ++i) {
    acc += dec(i << s.trap_qubits(), i << s.trap_qubits()).real();
  }
  return acc;
}

}  // namespace

TEST(QasScheme, DeskParameters) {
  const QasScheme& s = *desk_scheme();
  EXPECT_EQ(s.y_qubits(), 2);
  EXPECT_EQ(s.design().size(), 11520U);
  EXPECT_LE(s.epsilon_prime(), 11520.0 / (4.0 * 16384.0));
  EXPECT_NEAR(s.epsilon(), std::exp2(5.0 / 3.0) + s.epsilon_prime(), 1e-15);
  const auto j = s.to_json();
  EXPECT_EQ(j["m"], 1);
  EXPECT_EQ(j["design_id"], "clifford-q2-gens-v1");
  EXPECT_EQ(j["irreducible_poly"], irreducible_polynomial(14));
  EXPECT_THROW(QasScheme::build(4, 3, 8), CapacityError);
  EXPECT_THROW(QasScheme::build(0, 1, 8), std::invalid_argument);
}

TEST(QasScheme, IsometriesOnRandomKeys) {
  const QasScheme& s = *desk_scheme();
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t key = rng.uniform_below(s.key_count());
    const Matrix& a = s.isometry(key);
    EXPECT_TRUE((a.adjoint() * a).isIdentity(1e-9));
    EXPECT_LT((a - oracle_isometry(s, key)).norm(), 1e-15);
  }
  EXPECT_THROW(s.isometry(s.key_count()), DimensionError);
}

TEST(Qas, VerifyAfterAuthIsIdentity) {
  for (int t : {1, 2}) {
    const QasHandle s = QasScheme::build(1, t, 14);
    Rng rng(40 + t);
    for (int i = 0; i < 50; ++i) {
      const std::uint64_t key = rng.uniform_below(s->key_count());
      const DensityOperator rho = random_density(1, rng, 1 + static_cast<int>(i % 2));
      const DensityOperator y = auth(*s, key, rho);
      const VerifyOutcome out = verify(*s, key, y, rng);
      EXPECT_TRUE(out.accepted);
      EXPECT_NEAR(out.accept_probability, 1.0, 1e-9);
      EXPECT_LT((out.message_state.matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-9);
      const PureState psi = random_pure_state(1, rng);
      EXPECT_NEAR(accept_probability(*s, key, auth(*s, key, psi)), 1.0, 1e-9);
    }
  }
}

TEST(Qas, VerifyChannelMatchesDecodeAndProjectOracle) {
  const QasScheme& s = *desk_scheme();
  Rng rng(2);
  for (int i = 0; i < 40; ++i) {
    const std::uint64_t key = rng.uniform_below(s.key_count());
    const DensityOperator rho = random_density(2, rng);
    const DensityOperator out = verify_channel(s, key, rho);
    EXPECT_NEAR(out.matrix().trace().real(), 1.0, 1e-9);
    const double p = oracle_accept(s, key, rho.matrix());
    EXPECT_NEAR(accept_probability(s, key, rho), p, 1e-12);
    // Flag qubit is last: accept block = even rows/cols offset 1.
    EXPECT_NEAR(out.matrix()(1, 1).real() + out.matrix()(3, 3).real(), p, 1e-12);
    EXPECT_NEAR(out.matrix()(0, 0).real(), (1.0 - p) / 2.0, 1e-12);
    const SubnormalizedOperator branch = verify_accept_branch(s, key, rho);
    EXPECT_NEAR(branch.weight(), accept_probability(s, key, rho), 1e-10);
    EXPECT_LE(branch.weight(), 1.0 + 1e-9);
  }
}

TEST(Qas, OrthogonalAndMaximallyMixedInputs) {
  for (int t : {1, 2}) {
    const QasHandle s = QasScheme::build(1, t, 10);
    const std::uint64_t key = 321;
    const Matrix& a = s->isometry(key);
    const Matrix complement = Matrix::Identity(a.rows(), a.rows()) - a * a.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> es(complement);
    const Vector orth = es.eigenvectors().col(a.rows() - 1);
    Rng rng(3);
    const VerifyOutcome out = verify(*s, key, DensityOperator::from_pure(PureState(orth)), rng);
    EXPECT_FALSE(out.accepted);
    EXPECT_NEAR(out.accept_probability, 0.0, 1e-12);
    EXPECT_TRUE(out.message_state.matrix().isApprox(Matrix::Identity(2, 2) / 2.0));
    EXPECT_NEAR(accept_probability(*s, key, DensityOperator::maximally_mixed(1 + t)), std::exp2(-t), 1e-12);
  }
}

TEST(Qas, DesignAverageIsTwoToMinusT) {
  const QasScheme& s = *desk_scheme();
  Rng rng(5);
  for (int i = 0; i < 20; ++i) {
    const DensityOperator rho = random_density(2, rng, 1 + static_cast<int>(i % 4));
    double direct = 0.0;
    for (std::uint64_t idx = 0; idx < s.design().size(); ++idx) {
      const Matrix a = s.isometry_for_index(idx);
      direct += (a.adjoint() * rho.matrix() * a).trace().real();
    }
    direct /= static_cast<double>(s.design().size());
    const double fast = avg_wrong_key_accept(s, rho, WrongKeyMode::kDesign);
    EXPECT_NEAR(fast, direct, 1e-12);
    EXPECT_NEAR(fast, 0.5, 1e-9);
    EXPECT_LE(fast, 2.0 * s.epsilon());
  }
}

TEST(Qas, KeyAverageMatchesPerKeyLoop) {
  const QasHandle s = QasScheme::build(1, 1, 12);
  Rng rng(6);
  const DensityOperator rho = random_density(2, rng);
  double direct = 0.0;
  for (std::uint64_t key = 0; key < s->key_count(); ++key) direct += oracle_accept(*s, key, rho.matrix());
  direct /= static_cast<double>(s->key_count());
  EXPECT_NEAR(avg_wrong_key_accept(*s, rho, WrongKeyMode::kKeys), direct, 1e-12);
  const double sampled = avg_wrong_key_accept(*s, rho, WrongKeyMode::kSampled, 4000, &rng);
  EXPECT_NEAR(sampled, direct, 0.05);
}

TEST(Qas, AuthenticatedStateCountsItsOwnKey) {
  const QasScheme& s = *desk_scheme();
  Rng rng(8);
  const std::uint64_t key = 777;
  const DensityOperator y = auth(s, key, random_density(1, rng));
  EXPECT_GE(avg_wrong_key_accept(s, y, WrongKeyMode::kKeys), 1.0 / static_cast<double>(s.key_count()));
}

TEST(Qas, KeyMapConsistency) {
  const QasScheme& s = *desk_scheme();
  for (std::uint64_t key : {0ULL, 5ULL, 11519ULL, 11520ULL, 11525ULL, 16383ULL}) {
    EXPECT_EQ(s.design_index(key), key % 11520);
    EXPECT_LT((s.isometry(key) - s.isometry_for_index(key % 11520)).norm(), 1e-15);
  }
  EXPECT_LT((s.isometry(11525) - s.isometry(5)).norm(), 1e-15);
}

TEST(Qas, SampledVerifyIsSeedDeterministic) {
  const QasScheme& s = *desk_scheme();
  Rng pick(9);
  const DensityOperator rho = random_density(2, pick);
  Rng a(100), b(100);
  for (int i = 0; i < 200; ++i) {
    const std::uint64_t key = static_cast<std::uint64_t>(i) * 37;
    EXPECT_EQ(verify(s, key, rho, a).accepted, verify(s, key, rho, b).accepted);
  }
}

TEST(Qas, ThreeQubitDesignScheme) {
  const QasHandle s = QasScheme::build(1, 2, 10);
  EXPECT_FALSE(s->design().enumerated());
  Rng rng(10);
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t key = rng.uniform_below(s->key_count());
    const PureState psi = random_pure_state(1, rng);
    EXPECT_NEAR(accept_probability(*s, key, auth(*s, key, psi)), 1.0, 1e-9);
  }
  // Haar-random pure states: the key average concentrates near 2^-t.
  const DensityOperator rho = DensityOperator::maximally_mixed(3);
  EXPECT_NEAR(avg_wrong_key_accept(*s, rho, WrongKeyMode::kKeys), 0.25, 1e-12);
}

TEST(Qas, CorruptedKeyMapBreaksCorrectness) {
  const QasHandle bad = desk_scheme()->with_corrupted_verify_key_map();
  EXPECT_TRUE(bad->corrupted());
  Rng rng(11);
  double worst = 1.0;
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t key = rng.uniform_below(bad->key_count());
    const PureState psi = random_pure_state(1, rng);
    worst = std::min(worst, accept_probability(*bad, key, auth(*bad, key, psi)));
  }
  EXPECT_LT(worst, 1.0 - 1e-3);
}

TEST(QasBookkeeping, TOptMinimizesTheUpperBound) {
  for (int n : {1, 2, 3}) {
    for (int k : {60, 80, 120}) {
      const double t = qas_t_opt(n, k);
      const double at = qas_epsilon_upper(n, t, k);
      EXPECT_LE(at, qas_epsilon_upper(n, t - 0.01, k));
      EXPECT_LE(at, qas_epsilon_upper(n, t + 0.01, k));
      // At t_opt the two terms balance 1 : 1/15, which gives the closed form.
      const double scale = std::exp2((5.0 * n - k) / 16.0);
      const double closed = std::exp2(23.0 / 4.0) / std::pow(15.0, 15.0 / 16.0) * scale;
      EXPECT_NEAR(at / closed, 1.0, 1e-12);
      EXPECT_LT(closed, qas_existence_epsilon(n, k));
      // Rounding t down costs at most a factor 2^(1/3) on the first term.
      const double floored = qas_epsilon_upper(n, std::floor(t), k);
      const double floor_cap =
          std::exp2(7.0 / 4.0) * std::pow(15.0, 1.0 / 16.0) * (std::exp2(1.0 / 3.0) + 1.0 / 15.0) * scale;
      EXPECT_LE(floored, floor_cap * (1.0 + 1e-12));
    }
  }
}
