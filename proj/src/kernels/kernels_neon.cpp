#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

#include "handseg/kernels.hpp"

namespace handseg::kernels {

namespace {

void weighted_accumulate(double* acc, const double* src, double weight,
                         std::size_t n) {
  const float64x2_t w = vdupq_n_f64(weight);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t s = vld1q_f64(src + i);
    const float64x2_t a = vld1q_f64(acc + i);
    vst1q_f64(acc + i, vaddq_f64(a, vmulq_f64(w, s)));
  }
  for (; i < n; ++i) acc[i] = acc[i] + weight * src[i];
}

void divide(double* v, double divisor, std::size_t n) {
  const float64x2_t d = vdupq_n_f64(divisor);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(v + i, vdivq_f64(vld1q_f64(v + i), d));
  for (; i < n; ++i) v[i] = v[i] / divisor;
}

void threshold(const double* v, double t, std::uint8_t* out, std::size_t n) {
  const float64x2_t tv = vdupq_n_f64(t);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t gt = vcgtq_f64(vld1q_f64(v + i), tv);
    out[i] = vgetq_lane_u64(gt, 0) ? 1 : 0;
    out[i + 1] = vgetq_lane_u64(gt, 1) ? 1 : 0;
  }
  for (; i < n; ++i) out[i] = v[i] > t ? 1 : 0;
}

void slic_assign(const SlicRun& r) {
  const double dy = r.y - r.cy;
  const double dy2s = dy * dy;
  const float64x2_t cl = vdupq_n_f64(r.cl);
  const float64x2_t ca = vdupq_n_f64(r.ca);
  const float64x2_t cb = vdupq_n_f64(r.cb);
  const float64x2_t cx = vdupq_n_f64(r.cx);
  const float64x2_t dy2 = vdupq_n_f64(dy2s);
  const float64x2_t scale = vdupq_n_f64(r.spatial_scale);
  const double lanes[2] = {0.0, 1.0};
  const float64x2_t lane = vld1q_f64(lanes);
  std::size_t i = 0;
  for (; i + 2 <= r.n; i += 2) {
    const float64x2_t dl = vsubq_f64(vld1q_f64(r.l + i), cl);
    const float64x2_t da = vsubq_f64(vld1q_f64(r.a + i), ca);
    const float64x2_t db = vsubq_f64(vld1q_f64(r.b + i), cb);
    const float64x2_t dc = vaddq_f64(
        vaddq_f64(vmulq_f64(dl, dl), vmulq_f64(da, da)), vmulq_f64(db, db));
    const float64x2_t x =
        vaddq_f64(vdupq_n_f64(r.x0 + static_cast<double>(i)), lane);
    const float64x2_t dx = vsubq_f64(x, cx);
    const float64x2_t ds = vaddq_f64(vmulq_f64(dx, dx), dy2);
    const float64x2_t d = vaddq_f64(dc, vmulq_f64(scale, ds));
    const float64x2_t best = vld1q_f64(r.best + i);
    const uint64x2_t lt = vcltq_f64(d, best);
    vst1q_f64(r.best + i, vbslq_f64(lt, d, best));
    if (vgetq_lane_u64(lt, 0)) r.label[i] = r.id;
    if (vgetq_lane_u64(lt, 1)) r.label[i + 1] = r.id;
  }
  for (; i < r.n; ++i) {
    const double dl = r.l[i] - r.cl;
    const double da = r.a[i] - r.ca;
    const double db = r.b[i] - r.cb;
    const double dc = (dl * dl + da * da) + db * db;
    const double dx = (r.x0 + static_cast<double>(i)) - r.cx;
    const double ds = dx * dx + dy2s;
    const double d = dc + r.spatial_scale * ds;
    if (d < r.best[i]) {
      r.best[i] = d;
      r.label[i] = r.id;
    }
  }
}

}  // namespace

const KernelTable& neon_table() {
  static const KernelTable table{"neon", weighted_accumulate, divide,
                                 threshold, slic_assign};
  return table;
}

}  // namespace handseg::kernels
#endif
