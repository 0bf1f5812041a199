#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "qolab/kernels.hpp"

namespace k = qolab::kernels;

namespace {

std::vector<std::int64_t> random_values(std::size_t n, std::uint64_t seed, std::int64_t lo, std::int64_t hi) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> dist(lo, hi);
  std::vector<std::int64_t> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

constexpr k::CompareOp kOps[] = {k::CompareOp::Eq, k::CompareOp::Ne, k::CompareOp::Lt,
                                 k::CompareOp::Le, k::CompareOp::Gt, k::CompareOp::Ge};

bool naive(std::int64_t v, k::CompareOp op, std::int64_t x) {
  switch (op) {
    case k::CompareOp::Eq: return v == x;
    case k::CompareOp::Ne: return v != x;
    case k::CompareOp::Lt: return v < x;
    case k::CompareOp::Le: return v <= x;
    case k::CompareOp::Gt: return v > x;
    case k::CompareOp::Ge: return v >= x;
  }
  return false;
}

}  // namespace

TEST(KernelsScalar, FilterCompareMatchesNaiveLoop) {
  const auto values = random_values(1000, 1, -20, 20);
  std::vector<std::uint32_t> out(values.size());
  for (auto op : kOps) {
    const auto n = k::scalar::filter_compare(values, op, 3, 100, out.data());
    std::vector<std::uint32_t> want;
    for (std::size_t i = 0; i < values.size(); ++i)
      if (naive(values[i], op, 3)) want.push_back(static_cast<std::uint32_t>(100 + i));
    ASSERT_EQ(std::vector<std::uint32_t>(out.begin(), out.begin() + n), want);
  }
}

TEST(KernelsScalar, BetweenIsInclusive) {
  const std::vector<std::int64_t> values = {1, 2, 3, 4, 5};
  std::vector<std::uint32_t> out(5);
  ASSERT_EQ(k::scalar::filter_between(values, 2, 4, 0, out.data()), 3u);
  EXPECT_EQ(out[0], 1u);
  EXPECT_EQ(out[2], 3u);
}

#if QOLAB_HAVE_AVX2_KERNELS

class KernelsAvx2 : public ::testing::Test {
 protected:
  void SetUp() override {
    if (k::detected_isa() != k::Isa::Avx2) GTEST_SKIP() << "CPU lacks AVX2";
  }
};

TEST_F(KernelsAvx2, FilterCompareEqualsScalar) {
  // Odd lengths exercise the scalar tails; extreme operands the signed compare.
  for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 31u, 1001u, 4099u}) {
    const auto values = random_values(n, n + 7, -50, 50);
    std::vector<std::uint32_t> a(n + 8), b(n + 8);
    for (auto op : kOps) {
      for (std::int64_t x : {std::int64_t{-51}, std::int64_t{0}, std::int64_t{17}, INT64_MIN, INT64_MAX}) {
        const auto na = k::scalar::filter_compare(values, op, x, 9, a.data());
        const auto nb = k::avx2::filter_compare(values, op, x, 9, b.data());
        ASSERT_EQ(na, nb) << "n=" << n;
        ASSERT_TRUE(std::equal(a.begin(), a.begin() + na, b.begin()));
      }
    }
  }
}

TEST_F(KernelsAvx2, FilterBetweenEqualsScalar) {
  const auto values = random_values(5003, 3, -1000, 1000);
  std::vector<std::uint32_t> a(values.size()), b(values.size());
  for (auto [lo, hi] : {std::pair<std::int64_t, std::int64_t>{-10, 10}, {5, 4}, {INT64_MIN, 0}, {0, INT64_MAX}}) {
    const auto na = k::scalar::filter_between(values, lo, hi, 0, a.data());
    const auto nb = k::avx2::filter_between(values, lo, hi, 0, b.data());
    ASSERT_EQ(na, nb);
    ASSERT_TRUE(std::equal(a.begin(), a.begin() + na, b.begin()));
  }
}

TEST_F(KernelsAvx2, RefineEqualsScalarIncludingInPlace) {
  const auto column = random_values(4000, 11, 0, 99);
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t i = 0; i < column.size(); i += 3) candidates.push_back(i);
  for (auto op : kOps) {
    std::vector<std::uint32_t> a(candidates.size());
    auto b = candidates;
    const auto na = k::scalar::refine_compare(column, candidates, op, 40, a.data());
    const auto nb = k::avx2::refine_compare(column, b, op, 40, b.data());
    ASSERT_EQ(na, nb);
    ASSERT_TRUE(std::equal(a.begin(), a.begin() + na, b.begin()));
  }
  std::vector<std::uint32_t> a(candidates.size()), b(candidates.size());
  const auto na = k::scalar::refine_between(column, candidates, 20, 60, a.data());
  const auto nb = k::avx2::refine_between(column, candidates, 20, 60, b.data());
  ASSERT_EQ(na, nb);
  ASSERT_TRUE(std::equal(a.begin(), a.begin() + na, b.begin()));
}

TEST_F(KernelsAvx2, HashesEqualScalar) {
  for (std::size_t n : {0u, 1u, 5u, 64u, 1027u}) {
    const auto keys = random_values(n, 5, INT64_MIN, INT64_MAX);
    std::vector<std::uint64_t> a(n), b(n);
    k::scalar::hash_keys(keys, a.data());
    k::avx2::hash_keys(keys, b.data());
    ASSERT_EQ(a, b);
    for (std::size_t i = 0; i < n; ++i) ASSERT_EQ(a[i], k::mix64(static_cast<std::uint64_t>(keys[i])));

    std::vector<std::uint32_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = static_cast<std::uint32_t>((i * 7) % n);
    auto ca = a, cb = a;
    k::scalar::hash_combine_gather(keys, rows, ca.data());
    k::avx2::hash_combine_gather(keys, rows, cb.data());
    ASSERT_EQ(ca, cb);
  }
}

#endif

TEST(KernelsDispatch, PinnedIsaIsUsed) {
  const auto before = k::active_isa();
  k::set_active_isa(k::Isa::Scalar);
  EXPECT_EQ(k::active_isa(), k::Isa::Scalar);
  const std::vector<std::int64_t> values = {5, 1, 5};
  std::vector<std::uint32_t> out(3);
  EXPECT_EQ(k::filter_compare(values, k::CompareOp::Eq, 5, 0, out.data()), 2u);
  k::set_active_isa(before);
}
