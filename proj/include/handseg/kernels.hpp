#pragma once

#include <cstddef>
#include <cstdint>

// Data-parallel inner loops. Each kernel has a scalar reference version and
// optional AVX2 / NEON variants; the variants must produce bit-identical
// results to the scalar code (same operation order, no FMA contraction).

namespace handseg::kernels {

/// One SLIC cluster centre visiting a horizontal run of pixels.
struct SlicRun {
  const double* l = nullptr;  // planes, already offset to the run start
  const double* a = nullptr;
  const double* b = nullptr;
  double* best = nullptr;     // running minimum distance per pixel
  std::int32_t* label = nullptr;
  std::size_t n = 0;
  double x0 = 0.0;            // x coordinate of the first pixel
  double y = 0.0;
  double cl = 0.0, ca = 0.0, cb = 0.0, cx = 0.0, cy = 0.0;
  double spatial_scale = 0.0;  // m^2 / S^2
  std::int32_t id = 0;
};

struct KernelTable {
  const char* name;
  /// acc[i] += weight * src[i]
  void (*weighted_accumulate)(double* acc, const double* src, double weight,
                              std::size_t n);
  /// v[i] /= divisor
  void (*divide)(double* v, double divisor, std::size_t n);
  /// out[i] = v[i] > threshold
  void (*threshold)(const double* v, double threshold, std::uint8_t* out,
                    std::size_t n);
  /// d = |dlab|^2 + scale * |dxy|^2; label/best updated where d < best.
  void (*slic_assign)(const SlicRun& run);
};

const KernelTable& scalar_kernels();
/// nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

/// Best available table. HANDSEG_KERNELS=scalar|avx2|neon overrides the
/// choice when that variant is available.
const KernelTable& active_kernels();

}  // namespace handseg::kernels
