#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "qcp/matrix_json.hpp"
#include "qcp/qmath.hpp"

using namespace qcp;

namespace {

Vector ket(std::initializer_list<Complex> amps) {
  Vector v(static_cast<Eigen::Index>(amps.size()));
  Eigen::Index i = 0;
  for (Complex a : amps) v(i++) = a;
  return v;
}

Matrix proj(const Vector& v) { return v * v.adjoint(); }

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

}  // namespace

TEST(Tensor, BasisProductPutsFirstFactorOnTheLeft) {
  const PureState s = tensor(PureState::basis(1, 0), PureState::basis(1, 1));
  EXPECT_EQ(s.qubits(), 2);
  EXPECT_LT((s.amplitudes() - ket({0, 1, 0, 0})).norm(), 1e-15);
}

TEST(Tensor, IdentityAndPlusStates) {
  EXPECT_TRUE(tensor(Matrix(Matrix::Identity(2, 2)), Matrix(Matrix::Identity(2, 2))).isIdentity());
  const PureState plus(ket({kInvSqrt2, kInvSqrt2}));
  const PureState pp = tensor(plus, plus);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(std::abs(pp.amplitudes()(i) - 0.5), 0.0, 1e-15);
}

TEST(Tensor, QubitCapIsEnforced) {
  const Matrix big = Matrix::Identity(128, 64);
  EXPECT_THROW(tensor(big, big), CapacityError);
  EXPECT_THROW(PureState::basis(13, 0), CapacityError);
}

TEST(PureState, RejectsBadInputs) {
  EXPECT_THROW(PureState(ket({1, 0, 0})), DimensionError);
  EXPECT_THROW(PureState(ket({1, 1})), InvariantError);
}

TEST(DensityOperator, RejectsNegativeAndNonHermitian) {
  Matrix m(2, 2);
  m << 1.5, 0, 0, -0.5;
  EXPECT_THROW(DensityOperator{m}, InvariantError);
  m << 0.5, 0.1, 0.2, 0.5;
  EXPECT_THROW(DensityOperator{m}, InvariantError);
}

TEST(PartialTrace, ProductAndBellStates) {
  const DensityOperator r01 = DensityOperator::from_pure(PureState::basis(2, 1));
  const std::vector<int> first{0};
  const Matrix reduced = partial_trace(r01.matrix(), 2, first);
  EXPECT_LT((reduced - proj(ket({1, 0}))).norm(), 1e-15);

  const Vector bell = ket({kInvSqrt2, 0, 0, kInvSqrt2});
  const Matrix half = partial_trace(proj(bell), 2, first);
  EXPECT_LT((half - Matrix::Identity(2, 2) / 2.0).norm(), 1e-15);
}

TEST(PartialTrace, RecoversFactorsOfRandomProducts) {
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const DensityOperator rho = random_density(2, rng);
    const DensityOperator sigma = random_density(1, rng);
    const DensityOperator joint = tensor(rho, sigma);
    const std::vector<int> keep_a{0, 1};
    const std::vector<int> keep_b{2};
    EXPECT_LT((partial_trace(joint, keep_a).matrix() - rho.matrix()).norm(), 1e-12);
    EXPECT_LT((partial_trace(joint, keep_b).matrix() - sigma.matrix()).norm(), 1e-12);
  }
}

TEST(PartialTrace, DirectSumOracleOnMiddleQubit) {
  // Independent oracle: explicit bit manipulation of every matrix element.
  Rng rng(4);
  const DensityOperator rho = random_density(3, rng);
  const std::vector<int> keep{0, 2};
  const Matrix got = partial_trace(rho.matrix(), 3, keep);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      Complex acc{};
      for (int m = 0; m < 2; ++m) {
        const int fi = ((i >> 1) << 2) | (m << 1) | (i & 1);
        const int fj = ((j >> 1) << 2) | (m << 1) | (j & 1);
        acc += rho.matrix()(fi, fj);
      }
      EXPECT_LT(std::abs(got(i, j) - acc), 1e-14);
    }
  }
}

TEST(PartialTrace, EmptyKeepGivesTrace) {
  Rng rng(1);
  const DensityOperator rho = random_density(2, rng);
  const Matrix t = partial_trace(rho.matrix(), 2, std::span<const int>{});
  ASSERT_EQ(t.rows(), 1);
  EXPECT_NEAR(t(0, 0).real(), 1.0, 1e-12);
}

TEST(TraceDistance, Examples) {
  const Matrix z0 = proj(ket({1, 0}));
  const Matrix z1 = proj(ket({0, 1}));
  const Matrix plus = proj(ket({kInvSqrt2, kInvSqrt2}));
  EXPECT_NEAR(trace_distance(z0, z0), 0.0, 1e-15);
  EXPECT_NEAR(trace_distance(z0, z1), 1.0, 1e-12);
  // Difference has eigenvalues +-sqrt(1/2)/... computed from the 2x2 closed form.
  const Matrix d = z0 - plus;
  const double a = d(0, 0).real();
  const double b = std::abs(d(0, 1));
  const double eig = std::sqrt(a * a + b * b);
  EXPECT_NEAR(trace_distance(z0, plus), eig, 1e-12);
  EXPECT_NEAR(trace_distance(z0, plus), std::sqrt(0.5), 1e-12);
  EXPECT_THROW(trace_distance(z0, Matrix(Matrix::Identity(4, 4))), DimensionError);
}

TEST(TraceDistance, MetricAxiomsOnRandomStates) {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    const int q = 1 + static_cast<int>(trial % 3);
    const DensityOperator r = random_density(q, rng);
    const DensityOperator s = random_density(q, rng, 1);
    const DensityOperator u = random_density(q, rng, 2);
    const double rs = trace_distance(r, s);
    EXPECT_GE(rs, -1e-9);
    EXPECT_LE(rs, 1.0 + 1e-9);
    EXPECT_NEAR(rs, trace_distance(s, r), 1e-9);
    EXPECT_LE(rs, trace_distance(r, u) + trace_distance(u, s) + 1e-9);
    EXPECT_NEAR(rs, trace_distance_hermitian(r.matrix(), s.matrix()), 1e-10);
  }
}

TEST(TraceDistance, OrthogonalBlockDecompositionIsAdditive) {
  Rng rng(2024);
  for (int trial = 0; trial < 25; ++trial) {
    const int count = 1 + static_cast<int>(rng.uniform_below(4));
    const Matrix basis = haar_unitary(4, rng);
    Matrix x = Matrix::Zero(16, 16);
    Matrix y = Matrix::Zero(16, 16);
    double sum = 0.0;
    for (int j = 0; j < count; ++j) {
      const Matrix g1 = ginibre(4, 4, rng);
      const Matrix g2 = ginibre(4, 4, rng);
      const Matrix xj = g1 * g1.adjoint();
      const Matrix yj = g2 * g2.adjoint();
      const Matrix pj = proj(basis.col(j));
      x += kron(pj, xj);
      y += kron(pj, yj);
      sum += trace_distance(xj, yj);
    }
    EXPECT_NEAR(trace_distance(x, y), sum, 1e-8 * std::max(1.0, sum));
  }
}

TEST(Channels, IdentityDepolarizingAndIsometry) {
  Rng rng(8);
  const DensityOperator rho = random_density(2, rng);
  EXPECT_LT((apply_channel(KrausChannel::identity(2), rho).matrix() - rho.matrix()).norm(), 1e-14);
  EXPECT_LT((apply_channel(KrausChannel::fully_depolarizing(2), rho).matrix() - Matrix::Identity(4, 4) / 4.0)
                .norm(),
            1e-12);

  const Isometry v(haar_unitary(8, rng).leftCols(4));
  const Matrix via_iso = apply_isometry(v, rho).matrix();
  const Matrix via_ch = apply_channel(KrausChannel::from_isometry(v), rho).matrix();
  EXPECT_LT((via_iso - via_ch).norm(), 1e-12);

  const PureState psi = random_pure_state(2, rng);
  EXPECT_NEAR(apply_isometry(v, psi).amplitudes().norm(), 1.0, 1e-12);
}

TEST(Channels, EmbeddingAppendsZeroQubit) {
  Matrix e = Matrix::Zero(4, 2);
  e(0, 0) = 1.0;
  e(2, 1) = 1.0;
  const PureState out = apply_isometry(Isometry(e), PureState::basis(1, 1));
  EXPECT_LT((out.amplitudes() - ket({0, 0, 1, 0})).norm(), 1e-15);
}

TEST(Channels, ContractivityOfRandomChannels) {
  Rng rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const KrausChannel ch = random_channel(2, 1 + static_cast<int>(trial % 2), 3, rng);
    const DensityOperator r = random_density(2, rng);
    const DensityOperator s = random_density(2, rng);
    EXPECT_LE(trace_distance(apply_channel(ch, r), apply_channel(ch, s)), trace_distance(r, s) + 1e-9);
  }
}

TEST(Channels, TraceNonIncreasingIsFlagged) {
  Matrix k0 = Matrix::Zero(2, 2);
  k0(0, 0) = 1.0;
  EXPECT_THROW(KrausChannel({k0}), InvariantError);
  const KrausChannel tni({k0}, KrausChannel::Kind::kTraceNonIncreasing);
  const DensityOperator mixed = DensityOperator::maximally_mixed(1);
  EXPECT_THROW(apply_channel(tni, mixed), InvariantError);
  EXPECT_NEAR(apply_channel_subnormalized(tni, mixed).weight(), 0.5, 1e-15);
}

TEST(Measurement, DeterministicAndBornFrequencies) {
  const std::vector<Matrix> z{proj(ket({1, 0})), proj(ket({0, 1}))};
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(measure_projective(DensityOperator::from_pure(PureState::basis(1, 0)), z, rng).outcome, 0U);
  }
  const DensityOperator plus = DensityOperator::from_pure(PureState(ket({kInvSqrt2, kInvSqrt2})));
  int zeros = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) zeros += measure_projective(plus, z, rng).outcome == 0 ? 1 : 0;
  EXPECT_NEAR(zeros / static_cast<double>(n), 0.5, 3 * 0.5 / std::sqrt(n));
}

TEST(Measurement, BellFirstQubitLeavesProductState) {
  const Vector bell = ket({kInvSqrt2, 0, 0, kInvSqrt2});
  const DensityOperator rho = DensityOperator::from_pure(PureState(bell));
  const Matrix i2 = Matrix::Identity(2, 2);
  const std::vector<Matrix> ps{kron(proj(ket({1, 0})), i2), kron(proj(ket({0, 1})), i2)};
  Rng rng(6);
  int ones = 0;
  for (int i = 0; i < 2000; ++i) {
    const MeasurementResult r = measure_projective(rho, ps, rng);
    ones += static_cast<int>(r.outcome);
    EXPECT_NEAR(r.probability, 0.5, 1e-12);
    const Matrix expect = r.outcome == 0 ? proj(ket({1, 0, 0, 0})) : proj(ket({0, 0, 0, 1}));
    EXPECT_LT((r.post_state.matrix() - expect).norm(), 1e-12);
  }
  EXPECT_GT(ones, 850);
  EXPECT_LT(ones, 1150);
}

TEST(Measurement, RejectsNonProjectorsAndIncompleteSets) {
  Rng rng(1);
  const DensityOperator rho = DensityOperator::maximally_mixed(1);
  const std::vector<Matrix> incomplete{proj(ket({1, 0}))};
  EXPECT_THROW(measure_projective(rho, incomplete, rng), InvariantError);
  Matrix half = Matrix::Identity(2, 2) / 2.0;
  const std::vector<Matrix> notproj{half, half};
  EXPECT_THROW(measure_projective(rho, notproj, rng), InvariantError);
}

TEST(Random, HaarUnitaryIsUnitaryAndSeeded) {
  Rng a(3), b(3);
  const Matrix u = haar_unitary(8, a);
  EXPECT_TRUE(is_unitary(u));
  EXPECT_EQ((u - haar_unitary(8, b)).norm(), 0.0);
}

TEST(MatrixJson, RoundTripIsExact) {
  Rng rng(12);
  const Matrix m = ginibre(3, 5, rng);
  const Matrix back = matrix_from_json(nlohmann::json::parse(matrix_to_json(m).dump()));
  EXPECT_EQ((m - back).norm(), 0.0);
  const auto j = matrix_to_json(Matrix::Identity(2, 2));
  EXPECT_EQ(j["data"][1][0].get<double>(), 0.0);
  EXPECT_EQ(j["data"][3][0].get<double>(), 1.0);
}

TEST(BitString, FormattingAndBounds) {
  EXPECT_EQ(BitString(5, 4).to_string(), "0101");
  EXPECT_THROW(BitString(4, 2), std::invalid_argument);
}
