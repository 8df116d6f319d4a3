#include <gtest/gtest.h>

#include "support.hpp"

using namespace relay;
using relay::testing::Rng;

namespace {

DiscreteStateSpace unit_delay() { return {Matrix::Zero(1, 1), Matrix::Ones(1, 1), Matrix::Ones(1, 1), Matrix::Zero(1, 1), 1.0}; }

}  // namespace

TEST(Lift, RatioOneIsIdentical) {
  Rng rng(21);
  const auto g = relay::testing::random_stable(rng, 3, 2, 2);
  const auto l = lift(g, 1);
  EXPECT_TRUE(l.inner.a() == g.a());
  EXPECT_TRUE(l.inner.b() == g.b());
  EXPECT_TRUE(l.inner.c() == g.c());
  EXPECT_TRUE(l.inner.d() == g.d());
  EXPECT_EQ(l.inner.period(), g.period());
}

TEST(Lift, UnitDelayByTwo) {
  const auto l = lift(unit_delay(), 2).inner;
  Matrix b(1, 2), c(2, 1), d(2, 2);
  b << 0, 1;
  c << 1, 0;
  d << 0, 0, 1, 0;
  EXPECT_EQ(l.a()(0, 0), 0.0);
  EXPECT_TRUE(l.b() == b);
  EXPECT_TRUE(l.c() == c);
  EXPECT_TRUE(l.d() == d);
  EXPECT_EQ(l.period(), 2.0);
}

TEST(Lift, RejectsBadRatio) { EXPECT_THROW(lift(unit_delay(), 0), ValidationError); }

TEST(Lift, BlockedSimulationMatchesRateH) {
  Rng rng(22);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = relay::testing::random_stable(rng, 2, 1, 1);
    const Matrix u = relay::testing::random_matrix(rng, 1, 30);
    const Matrix y = simulate(g, u);
    const Matrix yl = simulate(lift(g, 3).inner, block_sequence(u, 3));
    EXPECT_LE((unblock_sequence(yl, 3) - y).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Lift, PreservesEnergyOfResponses) {
  Rng rng(23);
  for (int n_ratio : {2, 3, 4}) {
    const auto g = relay::testing::random_stable(rng, 3, 2, 2);
    const Matrix u = relay::testing::random_matrix(rng, 2, 12 * n_ratio);
    const double e_h = simulate(g, u).squaredNorm();
    const double e_l = simulate(lift(g, n_ratio).inner, block_sequence(u, n_ratio)).squaredNorm();
    EXPECT_NEAR(e_h, e_l, 1e-12 * e_h);
  }
}

TEST(Lift, Multiplicative) {
  Rng rng(24);
  for (int n_ratio : {2, 3, 4}) {
    for (int trial = 0; trial < 5; ++trial) {
      const auto g1 = relay::testing::random_stable(rng, 2, 2, 3);
      const auto g2 = relay::testing::random_stable(rng, 3, 3, 2);
      const auto whole = impulse_response(lift(series(g2, g1), n_ratio).inner, 20);
      const auto parts = impulse_response(series(lift(g2, n_ratio).inner, lift(g1, n_ratio).inner), 20);
      EXPECT_LE(relay::testing::max_abs_diff(whole, parts), 1e-10);
    }
  }
}

TEST(Lift, StabilityPreserved) {
  Rng rng(25);
  for (int trial = 0; trial < 20; ++trial) {
    const double radius = trial % 2 ? 0.8 : 1.2;
    const DiscreteStateSpace g(relay::testing::random_with_radius(rng, 4, radius), relay::testing::random_matrix(rng, 4, 1),
                               relay::testing::random_matrix(rng, 1, 4), Matrix::Zero(1, 1), 1.0);
    EXPECT_EQ(is_stable(lift(g, 3).inner), is_stable(g));
  }
}

TEST(Lift, DimensionsScaleWithRatio) {
  Rng rng(26);
  const auto g = relay::testing::random_stable(rng, 3, 2, 4);
  const auto l = lift(g, 5);
  EXPECT_EQ(l.inner.inputs(), 10);
  EXPECT_EQ(l.inner.outputs(), 20);
  EXPECT_EQ(l.inner.states(), 3);
  EXPECT_EQ(l.base_inputs, 2);
  EXPECT_EQ(l.base_outputs, 4);
}

TEST(Blocking, GroupsConsecutiveSamples) {
  Matrix x(1, 4);
  x << 1, 2, 3, 4;
  const Matrix b = block_sequence(x, 2);
  Matrix want(2, 2);
  want << 1, 3, 2, 4;
  EXPECT_TRUE(b == want);
}

TEST(Blocking, InversePairAndPadding) {
  Rng rng(27);
  const Matrix x = relay::testing::random_matrix(rng, 2, 12);
  EXPECT_TRUE(unblock_sequence(block_sequence(x, 3), 3) == x);
  EXPECT_EQ(block_sequence(x, 3).squaredNorm(), x.squaredNorm());
  const Matrix odd = relay::testing::random_matrix(rng, 2, 7);
  const Matrix padded = unblock_sequence(block_sequence(odd, 3), 3);
  ASSERT_EQ(padded.cols(), 9);
  EXPECT_TRUE(padded.leftCols(7) == odd);
  EXPECT_EQ(padded.rightCols(2).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(unblock_sequence(Matrix::Zero(3, 2), 2), DimensionError);
}

TEST(SelectFirst, IdentityPicksComponentZero) {
  const auto s = select_first_subchannel(lift(identity_system(1), 2), 1);
  EXPECT_EQ(s.inputs(), 1);
  Matrix want(2, 1);
  want << 1, 0;
  EXPECT_TRUE(s.d() == want);
}

TEST(SelectFirst, KeepsOnlySubchannelZeroColumns) {
  const auto l = lift(unit_delay(), 2);
  const auto s = select_first_subchannel(l, 1);
  EXPECT_TRUE(s.b() == l.inner.b().leftCols(1));
  EXPECT_TRUE(s.d() == l.inner.d().leftCols(1));
  // an impulse on sub-channel 0 reaches the second output slot in the same block
  EXPECT_EQ(s.d()(1, 0), 1.0);
  EXPECT_EQ(s.b()(0, 0), 0.0);
  EXPECT_THROW(select_first_subchannel(l, 2), DimensionError);
}

TEST(SelectFirst, NormNotLargerThanLifted) {
  Rng rng(28);
  for (int trial = 0; trial < 5; ++trial) {
    const auto g = relay::testing::random_stable(rng, 3, 2, 2);
    const auto l = lift(g, 3);
    EXPECT_LE(hinf_norm(select_first_subchannel(l, 2)), hinf_norm(l.inner) + 1e-8);
  }
}

TEST(Lift, NormInvariance) {
  Rng rng(29);
  for (int n_ratio : {2, 3, 4}) {
    const auto g = relay::testing::random_stable(rng, 3, 2, 2);
    EXPECT_NEAR(hinf_norm(lift(g, n_ratio).inner), hinf_norm(g), 1e-6);
  }
}
