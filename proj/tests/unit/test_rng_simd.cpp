#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "cate/parallel.hpp"
#include "cate/rng.hpp"
#include "cate/simd/kernels.hpp"

namespace cate {
namespace {

TEST(Rng, SameSeedSameStream) {
  Engine a = make_engine(42, 3), b = make_engine(42, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(Rng, StreamsDiffer) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 1000; ++s) seen.insert(derive_seed(7, s));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
}

TEST(Rng, UniformIndexInRange) {
  Engine rng = make_engine(1);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) {
    auto k = uniform_index(rng, 7);
    ASSERT_LT(k, 7u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(Rng, ShuffleIsPermutation) {
  Engine rng = make_engine(5);
  for (int n : {0, 1, 2, 17, 100}) {
    std::vector<int> v(n);
    for (int i = 0; i < n; ++i) v[i] = i;
    shuffle(v, rng);
    std::sort(v.begin(), v.end());
    for (int i = 0; i < n; ++i) EXPECT_EQ(v[i], i);
  }
}

TEST(Rng, SampleWithoutReplacementDistinct) {
  Engine rng = make_engine(9);
  auto s = sample_without_replacement(rng, 50, 20);
  ASSERT_EQ(s.size(), 20u);
  std::set<std::size_t> uniq(s.begin(), s.end());
  EXPECT_EQ(uniq.size(), 20u);
  EXPECT_LT(*uniq.rbegin(), 50u);
}

TEST(Rng, NormalMoments) {
  Engine rng = make_engine(11);
  double sum = 0, sq = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    double z = standard_normal(rng);
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 4.0 / std::sqrt(n));
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Parallel, VisitsEveryIndexOnce) {
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
}

TEST(Parallel, PropagatesExceptions) {
  EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                 if (i == 3) throw std::runtime_error("boom");
               }),
               std::runtime_error);
}

// Vector kernels against the scalar reference.
class SimdEquivalence : public ::testing::Test {
 protected:
  void SetUp() override {
    scalar_ = &simd::scalar_kernels();
    vec_ = simd::avx2_kernels() ? simd::avx2_kernels() : simd::neon_kernels();
#if defined(__x86_64__)
    if (vec_ && !__builtin_cpu_supports("avx2")) vec_ = nullptr;
#endif
  }
  const simd::KernelTable* scalar_ = nullptr;
  const simd::KernelTable* vec_ = nullptr;
};

std::vector<double> random_vec(Engine& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = lo + (hi - lo) * uniform01(rng);
  return v;
}

TEST_F(SimdEquivalence, SplitScoresBitwiseEqual) {
  if (!vec_) GTEST_SKIP() << "no vector kernels on this machine";
  Engine rng = make_engine(21);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 8u, 31u, 257u}) {
    auto wl = random_vec(rng, n, 0.5, 10), sl = random_vec(rng, n, -5, 5);
    auto ul = random_vec(rng, n, 0.1, 3), vl = random_vec(rng, n, -2, 2), cl = random_vec(rng, n, 1, 9);
    std::vector<double> a(n), b(n);
    scalar_->regression_split_scores(wl.data(), sl.data(), 12.0, 3.0, a.data(), n);
    vec_->regression_split_scores(wl.data(), sl.data(), 12.0, 3.0, b.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(a[i], b[i]) << "regression n=" << n << " i=" << i;
    scalar_->causal_split_scores(cl.data(), ul.data(), vl.data(), 10.0, 4.0, 1.0, a.data(), n);
    vec_->causal_split_scores(cl.data(), ul.data(), vl.data(), 10.0, 4.0, 1.0, b.data(), n);
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(a[i], b[i]) << "causal n=" << n << " i=" << i;
  }
}

TEST_F(SimdEquivalence, AxpyBitwiseEqual) {
  if (!vec_) GTEST_SKIP() << "no vector kernels on this machine";
  Engine rng = make_engine(22);
  for (std::size_t n : {0u, 1u, 7u, 64u, 1001u}) {
    auto x = random_vec(rng, n, -3, 3), y = random_vec(rng, n, -3, 3);
    auto y2 = y;
    scalar_->axpy(0.37, x.data(), y.data(), n);
    vec_->axpy(0.37, x.data(), y2.data(), n);
    EXPECT_EQ(y, y2);
  }
}

TEST_F(SimdEquivalence, ReductionsAgreeToRounding) {
  if (!vec_) GTEST_SKIP() << "no vector kernels on this machine";
  Engine rng = make_engine(23);
  for (std::size_t n : {0u, 1u, 5u, 16u, 999u, 4096u}) {
    auto x = random_vec(rng, n, -1, 1), y = random_vec(rng, n, -1, 1);
    double scale = 0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(x[i] * y[i]) + (x[i] - y[i]) * (x[i] - y[i]);
    const double tol = 1e-14 * std::max(1.0, scale);
    EXPECT_NEAR(scalar_->dot(x.data(), y.data(), n), vec_->dot(x.data(), y.data(), n), tol);
    EXPECT_NEAR(scalar_->squared_distance(x.data(), y.data(), n), vec_->squared_distance(x.data(), y.data(), n),
                tol);
  }
}

TEST(SimdDispatch, ActiveTableIsUsable) {
  const auto& k = simd::active();
  double x[3] = {1, 2, 3}, y[3] = {4, 5, 6};
  EXPECT_DOUBLE_EQ(k.dot(x, y, 3), 32.0);
  EXPECT_DOUBLE_EQ(k.squared_distance(x, y, 3), 27.0);
  EXPECT_FALSE(simd::isa_name(k.isa).empty());
}

}  // namespace
}  // namespace cate
