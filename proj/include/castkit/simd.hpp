#pragma once

// Similarity kernels with a scalar reference and an AVX2/FMA variant chosen
// at runtime. Every public similarity in the library funnels through the
// active kernel table, so a single process never mixes rounding behaviours.
//
// Within one level, `dot4` lane k is bitwise equal to `dot(a, b[k])`; the
// blocked helpers below rely on that to keep pairwise matrices consistent
// with single-pair similarities.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace castkit::simd {

enum class Level { kScalar, kAvx2 };

struct KernelTable {
  Level level;
  float (*dot)(const float* a, const float* b, std::size_t n);
  void (*dot4)(const float* a, const float* const* b, std::size_t n, float* out);
  // acc[i] += double(x[i]); exact, so identical across levels.
  void (*accumulate)(double* acc, const float* x, std::size_t n);
};

const KernelTable& scalar_kernels();
// nullptr when the binary was built without AVX2 support.
const KernelTable* avx2_kernels();

bool level_supported(Level level);
Level best_level();

// Active table. Initialised from CASTKIT_SIMD=scalar|avx2 when set,
// otherwise `best_level()`.
const KernelTable& kernels();
void set_level(Level level);
Level active_level();

std::string_view level_name(Level level);
std::optional<Level> parse_level(std::string_view name);

inline float dot(const float* a, const float* b, std::size_t n) {
  return kernels().dot(a, b, n);
}

// out[i * ld + j] = dot(a_i, b_j) for row-major blocks with row stride `dim`.
void similarity_block(const float* a, std::size_t a_rows, const float* b,
                      std::size_t b_rows, std::size_t dim, float* out,
                      std::size_t ld);

// Gathered variant: rows addressed through pointer lists.
void similarity_block(std::span<const float* const> a,
                      std::span<const float* const> b, std::size_t dim,
                      float* out, std::size_t ld);

}  // namespace castkit::simd
