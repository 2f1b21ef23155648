#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "tokgossip/fusion.hpp"

using namespace tokgossip;

TEST(Fuse, Examples) {
  const FusionSpec sum(FusionKind::Sum), max(FusionKind::Max), avg(FusionKind::WeightedAvg);
  EXPECT_EQ(sum.fuse(SumValue{3}, SumValue{4}), FusionValue(SumValue{7}));
  EXPECT_EQ(max.fuse(MaxValue{2}, MaxValue{9}), FusionValue(MaxValue{9}));
  const auto w = std::get<AvgValue>(avg.fuse(AvgValue{2, 1}, AvgValue{4, 3}));
  EXPECT_DOUBLE_EQ(w.estimate, 3.5);
  EXPECT_DOUBLE_EQ(w.weight, 4);
  EXPECT_EQ(sum.fuse(SumValue{5}, sum.identity()), FusionValue(SumValue{5}));
}

TEST(Fuse, IdentityBothSides) {
  for (auto kind : {FusionKind::Sum, FusionKind::Max, FusionKind::WeightedAvg}) {
    const FusionSpec f(kind);
    const FusionValue x = f.from_integer(-17);
    EXPECT_EQ(f.fuse(x, f.identity()), x);
    EXPECT_EQ(f.fuse(f.identity(), x), x);
    EXPECT_TRUE(f.is_identity(f.fuse(f.identity(), f.identity())));
  }
}

TEST(Fuse, Commutative) {
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<int> d(-1000, 1000);
  const FusionSpec avg(FusionKind::WeightedAvg);
  for (int i = 0; i < 200; ++i) {
    const FusionValue a = AvgValue{d(gen) / 7.0, 1.0 + (d(gen) + 1000) / 100.0};
    const FusionValue b = AvgValue{d(gen) / 3.0, 1.0 + (d(gen) + 1000) / 50.0};
    EXPECT_TRUE(approx_equal(avg.fuse(a, b), avg.fuse(b, a), 1e-12));
    for (auto kind : {FusionKind::Sum, FusionKind::Max}) {
      const FusionSpec f(kind);
      const auto x = f.from_integer(d(gen)), y = f.from_integer(d(gen));
      EXPECT_EQ(f.fuse(x, y), f.fuse(y, x));
    }
  }
}

TEST(Fold, Examples) {
  const FusionSpec sum(FusionKind::Sum), max(FusionKind::Max), avg(FusionKind::WeightedAvg);
  const std::vector<FusionValue> xs{SumValue{1}, SumValue{2}, SumValue{3}, SumValue{4}};
  EXPECT_EQ(sum.fold(xs), FusionValue(SumValue{10}));
  const std::vector<FusionValue> single{MaxValue{5}};
  EXPECT_EQ(max.fold(single), FusionValue(MaxValue{5}));
  const std::vector<FusionValue> ws{AvgValue{1, 1}, AvgValue{3, 1}, AvgValue{5, 2}};
  const auto r = std::get<AvgValue>(avg.fold(ws));
  EXPECT_DOUBLE_EQ(r.estimate, 3.5);
  EXPECT_DOUBLE_EQ(r.weight, 4);
  // Pairwise tree order gives the same result.
  const auto tree = avg.fuse(avg.fuse(ws[0], ws[2]), ws[1]);
  EXPECT_TRUE(approx_equal(tree, avg.fold(ws), 1e-12));
}

TEST(Fold, AnyTreeSameResult) {
  std::mt19937_64 gen(9);
  std::uniform_int_distribution<std::int64_t> d(-100000, 100000);
  for (auto kind : {FusionKind::Sum, FusionKind::Max, FusionKind::WeightedAvg}) {
    const FusionSpec f(kind);
    std::vector<FusionValue> xs;
    for (int i = 0; i < 64; ++i) xs.push_back(f.from_integer(d(gen)));
    const FusionValue want = f.fold(xs);
    for (int rep = 0; rep < 20; ++rep) {
      auto pool = xs;
      while (pool.size() > 1) {
        std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
        const std::size_t i = pick(gen);
        std::size_t j = pick(gen);
        if (i == j) continue;
        pool[i] = f.fuse(pool[i], pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
      }
      EXPECT_TRUE(approx_equal(pool[0], want, 1e-9));
    }
  }
}

TEST(Fuse, KindMismatchAndOverflow) {
  const FusionSpec sum(FusionKind::Sum);
  EXPECT_THROW(sum.fuse(SumValue{1}, MaxValue{1}), UsageError);
  EXPECT_THROW(sum.fuse(SumValue{std::numeric_limits<std::int64_t>::max()}, SumValue{1}),
               SimulationError);
  EXPECT_THROW(sum.fold(std::vector<FusionValue>{}), UsageError);
}

TEST(Payload, Examples) {
  const FusionSpec sum(FusionKind::Sum), max(FusionKind::Max);
  EXPECT_EQ(fuse_payload(sum, {SumValue{3}, 2}, {SumValue{5}, 1}), (TokenPayload{SumValue{8}, 3}));
  EXPECT_EQ(fuse_payload(sum, {SumValue{3}, 2}, {sum.identity(), 0}), (TokenPayload{SumValue{3}, 2}));
  EXPECT_EQ(fuse_payload(max, {MaxValue{1}, 4}, {MaxValue{9}, 4}), (TokenPayload{MaxValue{9}, 8}));
}

TEST(Values, ReadOneLinePerNode) {
  std::stringstream in("5\n-3\n12\n");
  const auto v = read_values(in, FusionSpec(FusionKind::Max));
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[1], FusionValue(MaxValue{-3}));
  std::stringstream avg("1.5 2\n3\n");
  const auto w = read_values(avg, FusionSpec(FusionKind::WeightedAvg));
  EXPECT_EQ(std::get<AvgValue>(w[0]).weight, 2.0);
  EXPECT_EQ(std::get<AvgValue>(w[1]).weight, 1.0);
  std::stringstream bad("1\nx\n");
  EXPECT_THROW(read_values(bad, FusionSpec(FusionKind::Sum)), UsageError);
  std::stringstream blank("1\n\n2\n");
  EXPECT_THROW(read_values(blank, FusionSpec(FusionKind::Sum)), UsageError);
}

TEST(Values, WriteReadRoundTrip) {
  const FusionSpec avg(FusionKind::WeightedAvg);
  const std::vector<FusionValue> xs{AvgValue{0.1, 1}, AvgValue{1.0 / 3.0, 2.5}};
  std::stringstream ss;
  write_values(ss, xs);
  EXPECT_EQ(read_values(ss, avg), xs);
}
