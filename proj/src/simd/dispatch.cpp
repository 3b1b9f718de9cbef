#include <cstdlib>
#include <string>

#include "cate/simd/kernels.hpp"

namespace cate::simd {

#if !defined(CATE_HAVE_AVX2)
const KernelTable* avx2_kernels() { return nullptr; }
#endif
#if !defined(CATE_HAVE_NEON)
const KernelTable* neon_kernels() { return nullptr; }
#endif

namespace {

const KernelTable& select() {
  if (const char* forced = std::getenv("CATE_SIMD")) {
    if (std::string(forced) == "scalar") return scalar_kernels();
  }
#if defined(CATE_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  if (__builtin_cpu_supports("avx2")) return *avx2_kernels();
#endif
#if defined(CATE_HAVE_NEON)
  return *neon_kernels();
#endif
  return scalar_kernels();
}

}  // namespace

const KernelTable& active() {
  static const KernelTable& table = select();
  return table;
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
    case Isa::Neon:
      return "neon";
  }
  return "unknown";
}

}  // namespace cate::simd
