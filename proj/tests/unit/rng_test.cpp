#include <gtest/gtest.h>

#include <set>

#include "arl/rng.hpp"

using arl::make_stream;
using arl::StreamTag;
using arl::tag;

TEST(Rng, SamePathSameSequence) {
  auto a = make_stream(7, {1, 2, 3, tag(StreamTag::kRollout)});
  auto b = make_stream(7, {1, 2, 3, tag(StreamTag::kRollout)});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, DistinctPathsDistinctSeeds) {
  std::set<std::uint64_t> seeds;
  for (std::uint64_t trial = 0; trial < 4; ++trial)
    for (std::uint64_t gen = 0; gen < 50; ++gen)
      for (std::uint64_t agent = 0; agent < 50; ++agent)
        seeds.insert(arl::derive_seed(11, {trial, gen, agent, tag(StreamTag::kMutation)}));
  EXPECT_EQ(seeds.size(), 4u * 50u * 50u);
  // Path order matters.
  EXPECT_NE(arl::derive_seed(0, {1, 2}), arl::derive_seed(0, {2, 1}));
}

TEST(Rng, UniformStaysInHalfOpenUnitInterval) {
  auto rng = make_stream(3, {tag(StreamTag::kTest)});
  double lo = 1.0, hi = 0.0, sum = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_LT(lo, 1e-3);
  EXPECT_GT(hi, 1.0 - 1e-3);
}

TEST(Rng, NormalMoments) {
  auto rng = make_stream(5, {tag(StreamTag::kTest)});
  const int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 3.0 / std::sqrt(n));
  EXPECT_NEAR(s2 / n - (s / n) * (s / n), 1.0, 0.02);
}
