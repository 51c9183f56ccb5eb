#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "volmf/numerics.hpp"
#include "volmf/synth.hpp"

using namespace volmf;
using namespace volmf::synth;

TEST(GaussianNoise, MomentsAndDeterminism) {
  const auto x = gaussian_noise(200000, 11);
  EXPECT_NEAR(mean(x), 0.0, 0.02);
  EXPECT_NEAR(sample_variance(x), 1.0, 0.02);
  EXPECT_EQ(x, gaussian_noise(200000, 11));
  EXPECT_NE(x, gaussian_noise(200000, 12));
  EXPECT_EQ(gaussian_noise(1, 5).size(), 1u);
}

TEST(Cascade, SumsToOne) {
  for (int n = 8; n <= 20; ++n) {
    const auto x = binomial_cascade({n, 0.7});
    ASSERT_EQ(x.size(), std::size_t{1} << n);
    EXPECT_NEAR(pairwise_sum(x), 1.0, 1e-12) << n;
  }
}

TEST(Cascade, FirstLevelsByHand) {
  const auto x = binomial_cascade({8, 0.75});
  EXPECT_NEAR(x[0], std::pow(0.75, 8), 1e-15 * x[0]);
  EXPECT_NEAR(x[255], std::pow(0.25, 8), 1e-15 * x[255]);
  EXPECT_NEAR(x[3], std::pow(0.75, 6) * 0.0625, 1e-15 * x[3]);
}

TEST(Cascade, RejectsBadSpec) {
  EXPECT_THROW(binomial_cascade({3, 0.75}), ValidationError);
  EXPECT_THROW(binomial_cascade({25, 0.75}), ValidationError);
  EXPECT_THROW(binomial_cascade({16, 0.5}), ValidationError);
  EXPECT_THROW(binomial_cascade({16, 1.0}), ValidationError);
}

TEST(CascadeExponents, KnownValues) {
  // h(2) = 1/2 - ln(0.625) / (2 ln 2)
  EXPECT_NEAR(cascade_h_analytic(2.0, 0.75), 0.5 - std::log(0.625) / (2.0 * std::log(2.0)), 1e-15);
  EXPECT_NEAR(cascade_h_analytic(2.0, 0.75), 0.839036, 1e-6);
  // equal weights collapse to a constant
  for (double q : {-5.0, -1.0, 0.0, 0.4, 3.0}) EXPECT_NEAR(cascade_h_analytic(q, 0.5), 1.0, 1e-14);
  EXPECT_THROW(cascade_h_analytic(1.0, 0.3), ValidationError);
}

TEST(CascadeExponents, ZeroIsTheLimit) {
  for (double a : {0.55, 0.7, 0.75, 0.9}) {
    const double h0 = cascade_h_analytic(0.0, a);
    EXPECT_NEAR(cascade_h_formula(1e-6, a), h0, 1e-6);
    EXPECT_NEAR(cascade_h_formula(-1e-6, a), h0, 1e-6);
  }
}

TEST(CascadeExponents, DecreasingInQ) {
  for (double q = 0.2; q <= 10.0; q += 0.2) EXPECT_GT(cascade_h_analytic(-q, 0.75), cascade_h_analytic(q, 0.75));
  for (double q = -6.0; q < 6.0; q += 0.2)
    EXPECT_GT(cascade_alpha_analytic(q, 0.75), cascade_alpha_analytic(q + 0.2, 0.75));
}

TEST(CascadeExponents, AlphaIsDerivativeOfTau) {
  const double a = 0.75, e = 1e-5;
  for (double q : {-3.0, -0.5, 0.7, 2.5}) {
    const double d = ((q + e) * cascade_h_formula(q + e, a) - (q - e) * cascade_h_formula(q - e, a)) / (2 * e);
    EXPECT_NEAR(cascade_alpha_analytic(q, a), d, 1e-8);
  }
}

TEST(RandomWalkTicks, Layout) {
  const auto t = random_walk_ticks(100, 60, 4, 50.0, 0.01, 1000);
  ASSERT_EQ(t.records.size(), 100u);
  EXPECT_EQ(t.records.front().timestamp, 1000);
  EXPECT_EQ(t.records.back().timestamp, 1000 + 99 * 60);
  EXPECT_DOUBLE_EQ(t.records.front().price, 50.0);
  for (const auto& r : t.records) EXPECT_GT(r.price, 0.0);
  EXPECT_THROW(random_walk_ticks(10, 0, 1), ValidationError);
}
