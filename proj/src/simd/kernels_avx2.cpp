#include <immintrin.h>

#include "castkit/simd.hpp"

namespace castkit::simd {
namespace {

// Fixed reduction order: lanes (0+4, 1+5, 2+6, 3+7), then pairwise.
inline float hsum(__m256 v) {
  const __m128 lo = _mm256_castps256_ps128(v);
  const __m128 hi = _mm256_extractf128_ps(v, 1);
  __m128 s = _mm_add_ps(lo, hi);
  s = _mm_add_ps(s, _mm_movehl_ps(s, s));
  s = _mm_add_ss(s, _mm_shuffle_ps(s, s, 0x55));
  return _mm_cvtss_f32(s);
}

float dot_avx2(const float* a, const float* b, std::size_t n) {
  __m256 acc0 = _mm256_setzero_ps();
  __m256 acc1 = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    acc1 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i + 8), _mm256_loadu_ps(b + i + 8),
                           acc1);
  }
  if (i + 8 <= n) {
    acc0 = _mm256_fmadd_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i), acc0);
    i += 8;
  }
  float sum = hsum(_mm256_add_ps(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void dot4_avx2(const float* a, const float* const* b, std::size_t n,
               float* out) {
  __m256 acc[4][2];
  for (auto& lane : acc) lane[0] = lane[1] = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 16 <= n; i += 16) {
    const __m256 x0 = _mm256_loadu_ps(a + i);
    const __m256 x1 = _mm256_loadu_ps(a + i + 8);
    for (int k = 0; k < 4; ++k) {
      acc[k][0] = _mm256_fmadd_ps(x0, _mm256_loadu_ps(b[k] + i), acc[k][0]);
      acc[k][1] = _mm256_fmadd_ps(x1, _mm256_loadu_ps(b[k] + i + 8), acc[k][1]);
    }
  }
  const bool has_half = i + 8 <= n;
  if (has_half) {
    const __m256 x0 = _mm256_loadu_ps(a + i);
    for (int k = 0; k < 4; ++k)
      acc[k][0] = _mm256_fmadd_ps(x0, _mm256_loadu_ps(b[k] + i), acc[k][0]);
    i += 8;
  }
  for (int k = 0; k < 4; ++k) {
    float sum = hsum(_mm256_add_ps(acc[k][0], acc[k][1]));
    for (std::size_t j = i; j < n; ++j) sum += a[j] * b[k][j];
    out[k] = sum;
  }
}

void accumulate_avx2(double* acc, const float* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_cvtps_pd(_mm_loadu_ps(x + i));
    _mm256_storeu_pd(acc + i, _mm256_add_pd(_mm256_loadu_pd(acc + i), v));
  }
  for (; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

}  // namespace

const KernelTable* avx2_kernels() {
  static const KernelTable table{Level::kAvx2, &dot_avx2, &dot4_avx2,
                                 &accumulate_avx2};
  return &table;
}

}  // namespace castkit::simd
