#include <gtest/gtest.h>

#include <cmath>

#include "castkit/simd.hpp"
#include "support.hpp"

using namespace castkit;

namespace {

double reference_dot(const float* a, const float* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += double(a[i]) * double(b[i]);
  return s;
}

std::vector<const simd::KernelTable*> available_tables() {
  std::vector<const simd::KernelTable*> tables{&simd::scalar_kernels()};
  if (simd::level_supported(simd::Level::kAvx2)) tables.push_back(simd::avx2_kernels());
  return tables;
}

}  // namespace

TEST(Simd, DotMatchesDoubleReferenceAtEveryLevel) {
  Rng rng(1);
  for (const auto* table : available_tables()) {
    for (std::size_t n : {1u, 3u, 7u, 8u, 15u, 16u, 31u, 64u, 100u, 512u}) {
      std::vector<float> a(n), b(n);
      for (auto& x : a) x = static_cast<float>(rng.uniform(-1, 1));
      for (auto& x : b) x = static_cast<float>(rng.uniform(-1, 1));
      EXPECT_NEAR(table->dot(a.data(), b.data(), n), reference_dot(a.data(), b.data(), n),
                  1e-5)
          << simd::level_name(table->level) << " n=" << n;
    }
  }
}

TEST(Simd, Dot4LanesAreBitwiseEqualToDot) {
  Rng rng(2);
  for (const auto* table : available_tables()) {
    for (std::size_t n : {5u, 8u, 64u, 67u, 512u}) {
      std::vector<float> a(n);
      std::vector<std::vector<float>> b(4, std::vector<float>(n));
      for (auto& x : a) x = static_cast<float>(rng.normal());
      for (auto& row : b)
        for (auto& x : row) x = static_cast<float>(rng.normal());
      const float* ptrs[4] = {b[0].data(), b[1].data(), b[2].data(), b[3].data()};
      float out[4];
      table->dot4(a.data(), ptrs, n, out);
      for (int k = 0; k < 4; ++k)
        EXPECT_EQ(out[k], table->dot(a.data(), b[k].data(), n))
            << simd::level_name(table->level) << " lane " << k;
    }
  }
}

TEST(Simd, Avx2AgreesWithScalarWithinTolerance) {
  if (!simd::level_supported(simd::Level::kAvx2)) GTEST_SKIP() << "no AVX2 on this host";
  Rng rng(3);
  const auto& scalar = simd::scalar_kernels();
  const auto& avx = *simd::avx2_kernels();
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(600);
    auto a = test::random_unit(rng, n);
    auto b = test::random_unit(rng, n);
    EXPECT_NEAR(scalar.dot(a.data(), b.data(), n), avx.dot(a.data(), b.data(), n), 1e-5);
  }
}

TEST(Simd, AccumulateIsExactAndLevelIndependent) {
  Rng rng(4);
  std::vector<float> x(77);
  for (auto& v : x) v = static_cast<float>(rng.normal());
  std::vector<double> want(x.size(), 0.5);
  for (std::size_t i = 0; i < x.size(); ++i) want[i] += double(x[i]);
  for (const auto* table : available_tables()) {
    std::vector<double> acc(x.size(), 0.5);
    table->accumulate(acc.data(), x.data(), x.size());
    EXPECT_EQ(acc, want) << simd::level_name(table->level);
  }
}

TEST(Simd, SimilarityBlockMatchesPairwiseDot) {
  Rng rng(5);
  const std::size_t dim = 33, rows_a = 7, rows_b = 10;
  std::vector<float> a(rows_a * dim), b(rows_b * dim);
  for (auto& v : a) v = static_cast<float>(rng.normal());
  for (auto& v : b) v = static_cast<float>(rng.normal());
  std::vector<float> out(rows_a * rows_b);
  simd::similarity_block(a.data(), rows_a, b.data(), rows_b, dim, out.data(), rows_b);
  std::vector<const float*> pa, pb;
  for (std::size_t i = 0; i < rows_a; ++i) pa.push_back(a.data() + i * dim);
  for (std::size_t j = 0; j < rows_b; ++j) pb.push_back(b.data() + j * dim);
  std::vector<float> gathered(rows_a * rows_b);
  simd::similarity_block(pa, pb, dim, gathered.data(), rows_b);
  for (std::size_t i = 0; i < rows_a; ++i)
    for (std::size_t j = 0; j < rows_b; ++j) {
      const float want = simd::dot(pa[i], pb[j], dim);
      EXPECT_EQ(out[i * rows_b + j], want);
      EXPECT_EQ(gathered[i * rows_b + j], want);
    }
}

TEST(Simd, LevelNamesRoundTrip) {
  for (auto level : {simd::Level::kScalar, simd::Level::kAvx2})
    EXPECT_EQ(simd::parse_level(simd::level_name(level)), level);
  EXPECT_FALSE(simd::parse_level("sse9").has_value());
  EXPECT_TRUE(simd::level_supported(simd::Level::kScalar));
}

TEST(Simd, SetLevelSwitchesActiveTable) {
  const auto original = simd::active_level();
  simd::set_level(simd::Level::kScalar);
  EXPECT_EQ(simd::active_level(), simd::Level::kScalar);
  EXPECT_EQ(simd::kernels().level, simd::Level::kScalar);
  simd::set_level(original);
  EXPECT_EQ(simd::active_level(), original);
}
