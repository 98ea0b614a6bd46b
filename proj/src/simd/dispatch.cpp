#include <atomic>
#include <cstdlib>
#include <vector>

#include "castkit/simd.hpp"

namespace castkit::simd {

#if !defined(CASTKIT_HAVE_AVX2)
const KernelTable* avx2_kernels() { return nullptr; }
#endif

bool level_supported(Level level) {
  switch (level) {
    case Level::kScalar:
      return true;
    case Level::kAvx2:
#if defined(CASTKIT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
      return avx2_kernels() != nullptr && __builtin_cpu_supports("avx2") &&
             __builtin_cpu_supports("fma");
#else
      return false;
#endif
  }
  return false;
}

Level best_level() {
  return level_supported(Level::kAvx2) ? Level::kAvx2 : Level::kScalar;
}

std::string_view level_name(Level level) {
  return level == Level::kAvx2 ? "avx2" : "scalar";
}

std::optional<Level> parse_level(std::string_view name) {
  if (name == "scalar") return Level::kScalar;
  if (name == "avx2") return Level::kAvx2;
  return std::nullopt;
}

namespace {

const KernelTable& table_for(Level level) {
  if (level == Level::kAvx2 && level_supported(Level::kAvx2))
    return *avx2_kernels();
  return scalar_kernels();
}

Level initial_level() {
  if (const char* env = std::getenv("CASTKIT_SIMD")) {
    if (auto parsed = parse_level(env); parsed && level_supported(*parsed))
      return *parsed;
  }
  return best_level();
}

std::atomic<const KernelTable*>& active_table() {
  static std::atomic<const KernelTable*> table{&table_for(initial_level())};
  return table;
}

}  // namespace

const KernelTable& kernels() {
  return *active_table().load(std::memory_order_relaxed);
}

void set_level(Level level) { active_table().store(&table_for(level)); }

Level active_level() { return kernels().level; }

void similarity_block(const float* a, std::size_t a_rows, const float* b,
                      std::size_t b_rows, std::size_t dim, float* out,
                      std::size_t ld) {
  std::vector<const float*> ra(a_rows), rb(b_rows);
  for (std::size_t i = 0; i < a_rows; ++i) ra[i] = a + i * dim;
  for (std::size_t j = 0; j < b_rows; ++j) rb[j] = b + j * dim;
  similarity_block(ra, rb, dim, out, ld);
}

void similarity_block(std::span<const float* const> a,
                      std::span<const float* const> b, std::size_t dim,
                      float* out, std::size_t ld) {
  const KernelTable& k = kernels();
  for (std::size_t i = 0; i < a.size(); ++i) {
    float* row = out + i * ld;
    std::size_t j = 0;
    for (; j + 4 <= b.size(); j += 4) k.dot4(a[i], b.data() + j, dim, row + j);
    for (; j < b.size(); ++j) row[j] = k.dot(a[i], b[j], dim);
  }
}

}  // namespace castkit::simd
