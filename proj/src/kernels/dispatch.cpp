#include <cstdlib>
#include <string_view>

#include "handseg/kernels.hpp"

namespace handseg::kernels {

#if defined(HANDSEG_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(__aarch64__) && defined(__ARM_NEON)
const KernelTable& neon_table();
#endif

const KernelTable* avx2_kernels() {
#if defined(HANDSEG_HAVE_AVX2)
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &avx2_table() : nullptr;
#else
  return nullptr;
#endif
}

const KernelTable* neon_kernels() {
#if defined(__aarch64__) && defined(__ARM_NEON)
  return &neon_table();
#else
  return nullptr;
#endif
}

namespace {

const KernelTable& select() {
  const char* env = std::getenv("HANDSEG_KERNELS");
  const std::string_view want = env ? env : "";
  if (want == "scalar") return scalar_kernels();
  if (want == "avx2" && avx2_kernels()) return *avx2_kernels();
  if (want == "neon" && neon_kernels()) return *neon_kernels();
  if (const KernelTable* t = avx2_kernels()) return *t;
  if (const KernelTable* t = neon_kernels()) return *t;
  return scalar_kernels();
}

}  // namespace

const KernelTable& active_kernels() {
  static const KernelTable& table = select();
  return table;
}

}  // namespace handseg::kernels
