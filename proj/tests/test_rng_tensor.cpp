#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "fatigue/rng.hpp"
#include "fatigue/tensor.hpp"

using namespace fatigue;

TEST(Rng, SameSeedSameSequence) {
  Rng a(42), b(42), c(43);
  bool differs = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    EXPECT_EQ(x, b());
    differs = differs || x != c();
  }
  EXPECT_TRUE(differs);
}

TEST(Rng, SplitIsIndependentOfParentPosition) {
  Rng a(7);
  const Rng child_before = a.split(3);
  for (int i = 0; i < 10; ++i) a();
  EXPECT_EQ(a.split(3).key(), child_before.key());
  EXPECT_NE(a.split(3).key(), a.split(4).key());
}

TEST(Rng, UniformMomentsMatch) {
  // Sample mean of U[0,1) has std 1/sqrt(12 n); allow 5 sigma.
  Rng r(1);
  const int n = 100000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5.0 / std::sqrt(12.0 * n));
  EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 2e-3);
}

TEST(Rng, IndexCoversRange) {
  Rng r(2);
  std::set<std::size_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto k = r.index(9);
    ASSERT_LT(k, 9u);
    seen.insert(k);
  }
  EXPECT_EQ(seen.size(), 9u);
}

TEST(ParamSet, LayoutAndArithmetic) {
  ParamSet p;
  p.add("w", {2, 3});
  p.add("b", {2});
  EXPECT_EQ(p.count(), 2u);
  EXPECT_EQ(p.total_size(), 8u);
  p.fill(1.0);
  ParamSet g = p.zeros_like();
  g.get("w").at(1, 2) = 2.0;
  p.axpy(0.5, g);
  EXPECT_EQ(p.get("w").at(1, 2), 2.0);
  EXPECT_EQ(p.get("w").at(0, 0), 1.0);
  EXPECT_TRUE(p.all_finite());
  p.get("b").values[0] = std::nan("");
  EXPECT_FALSE(p.all_finite());
  ParamSet other;
  other.add("w", {3, 2});
  other.add("b", {2});
  EXPECT_ANY_THROW(p.check_same_layout(other));
  EXPECT_ANY_THROW(p.get("missing"));
}

TEST(ParamSet, UniformFillStaysInRange) {
  ParamSet p;
  p.add("w", {50, 50});
  Rng r(3);
  p.fill_uniform(r, -0.1, 0.1);
  for (double v : p[0].values) {
    EXPECT_GE(v, -0.1);
    EXPECT_LT(v, 0.1);
  }
}
