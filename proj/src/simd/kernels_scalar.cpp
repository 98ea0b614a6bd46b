#include "castkit/simd.hpp"

namespace castkit::simd {
namespace {

float dot_scalar(const float* a, const float* b, std::size_t n) {
  float sum = 0.0f;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void dot4_scalar(const float* a, const float* const* b, std::size_t n,
                 float* out) {
  float s0 = 0.0f, s1 = 0.0f, s2 = 0.0f, s3 = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    const float x = a[i];
    s0 += x * b[0][i];
    s1 += x * b[1][i];
    s2 += x * b[2][i];
    s3 += x * b[3][i];
  }
  out[0] = s0;
  out[1] = s1;
  out[2] = s2;
  out[3] = s3;
}

void accumulate_scalar(double* acc, const float* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] += static_cast<double>(x[i]);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Level::kScalar, &dot_scalar, &dot4_scalar,
                                 &accumulate_scalar};
  return table;
}

}  // namespace castkit::simd
