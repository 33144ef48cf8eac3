#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "gexp/rng.hpp"
#include "gexp/stats.hpp"

using gexp::CounterRng;
using gexp::derive_seed;
using gexp::make_rng;
using gexp::RngStream;

TEST(Rng, PureFunctionOfSeedStreamCounter) {
  const CounterRng a(42, 1), b(42, 1), c(42, 2), d(43, 1);
  for (std::uint64_t k : {0ull, 1ull, 999ull, 1ull << 40}) {
    EXPECT_EQ(a.bits(k), b.bits(k));
    EXPECT_NE(a.bits(k), c.bits(k));
    EXPECT_NE(a.bits(k), d.bits(k));
  }
}

TEST(Rng, QueryOrderIrrelevant) {
  const CounterRng r(7, 3);
  const double late = r.u01(1000);
  const double early = r.u01(3);
  EXPECT_EQ(r.u01(1000), late);
  EXPECT_EQ(r.u01(3), early);
}

TEST(Rng, U01InHalfOpenUnitInterval) {
  const CounterRng r(1, 1);
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const double u = r.u01(k);
    EXPECT_GT(u, 0.0);
    EXPECT_LE(u, 1.0);
  }
}

TEST(Rng, GaussMomentsSane) {
  const CounterRng r(5, 1);
  gexp::RunningStats s;
  const long n = 200000;
  for (long k = 0; k < n; ++k) s.add(r.gauss(static_cast<std::uint64_t>(k)));
  // 5 sigma bands on mean and variance of N(0,1) samples
  EXPECT_NEAR(s.mean(), 0.0, 5.0 / std::sqrt(static_cast<double>(n)));
  EXPECT_NEAR(s.variance(), 1.0,
              5.0 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST(Rng, DeriveSeedSeparates) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t salt = 0; salt < 100; ++salt)
    seen.insert(derive_seed(1, salt));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_NE(derive_seed(1, 2), derive_seed(2, 1));
}

TEST(Rng, NamedStreamsDisjoint) {
  const auto p = make_rng(9, RngStream::kPaths);
  const auto f = make_rng(9, RngStream::kPathsFresh);
  int agree = 0;
  for (std::uint64_t k = 0; k < 64; ++k) agree += (p.bits(k) == f.bits(k));
  EXPECT_EQ(agree, 0);
}

TEST(Stats, MeanStderrMatchesClosedForm) {
  const std::vector<double> xs{1.0, 2.0, 3.0, 4.0};
  const auto ms = gexp::mean_stderr(xs);
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  // sample variance 5/3, stderr sqrt(5/12)
  EXPECT_NEAR(ms.stderr_, std::sqrt(5.0 / 12.0), 1e-15);
  EXPECT_EQ(ms.n, 4);
}

TEST(Stats, RunningStatsConstantSequence) {
  gexp::RunningStats s;
  for (int i = 0; i < 10; ++i) s.add(3.25);
  EXPECT_DOUBLE_EQ(s.mean(), 3.25);
  EXPECT_DOUBLE_EQ(s.variance(), 0.0);
}

TEST(Stats, PooledStderrIsHypot) {
  EXPECT_DOUBLE_EQ(gexp::pooled_stderr(3.0, 4.0), 5.0);
}
