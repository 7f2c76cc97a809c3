// Compiled with -mavx2 (no -mfma: results must match the scalar path bit for
// bit).
#include <immintrin.h>

#include "handseg/kernels.hpp"

namespace handseg::kernels {

namespace {

void weighted_accumulate(double* acc, const double* src, double weight,
                         std::size_t n) {
  const __m256d w = _mm256_set1_pd(weight);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d s = _mm256_loadu_pd(src + i);
    const __m256d a = _mm256_loadu_pd(acc + i);
    _mm256_storeu_pd(acc + i, _mm256_add_pd(a, _mm256_mul_pd(w, s)));
  }
  for (; i < n; ++i) acc[i] = acc[i] + weight * src[i];
}

void divide(double* v, double divisor, std::size_t n) {
  const __m256d d = _mm256_set1_pd(divisor);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    _mm256_storeu_pd(v + i, _mm256_div_pd(_mm256_loadu_pd(v + i), d));
  for (; i < n; ++i) v[i] = v[i] / divisor;
}

void threshold(const double* v, double t, std::uint8_t* out, std::size_t n) {
  const __m256d tv = _mm256_set1_pd(t);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const int bits =
        _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(v + i), tv, _CMP_GT_OQ));
    out[i] = bits & 1;
    out[i + 1] = (bits >> 1) & 1;
    out[i + 2] = (bits >> 2) & 1;
    out[i + 3] = (bits >> 3) & 1;
  }
  for (; i < n; ++i) out[i] = v[i] > t ? 1 : 0;
}

void slic_assign(const SlicRun& r) {
  const double dy = r.y - r.cy;
  const double dy2s = dy * dy;
  const __m256d cl = _mm256_set1_pd(r.cl);
  const __m256d ca = _mm256_set1_pd(r.ca);
  const __m256d cb = _mm256_set1_pd(r.cb);
  const __m256d cx = _mm256_set1_pd(r.cx);
  const __m256d dy2 = _mm256_set1_pd(dy2s);
  const __m256d scale = _mm256_set1_pd(r.spatial_scale);
  const __m256d lane = _mm256_set_pd(3.0, 2.0, 1.0, 0.0);
  const __m256i id = _mm256_set1_epi32(r.id);
  const __m256i pack = _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0);
  std::size_t i = 0;
  for (; i + 4 <= r.n; i += 4) {
    const __m256d dl = _mm256_sub_pd(_mm256_loadu_pd(r.l + i), cl);
    const __m256d da = _mm256_sub_pd(_mm256_loadu_pd(r.a + i), ca);
    const __m256d db = _mm256_sub_pd(_mm256_loadu_pd(r.b + i), cb);
    const __m256d dc = _mm256_add_pd(
        _mm256_add_pd(_mm256_mul_pd(dl, dl), _mm256_mul_pd(da, da)),
        _mm256_mul_pd(db, db));
    const __m256d x = _mm256_add_pd(
        _mm256_set1_pd(r.x0 + static_cast<double>(i)), lane);
    const __m256d dx = _mm256_sub_pd(x, cx);
    const __m256d ds = _mm256_add_pd(_mm256_mul_pd(dx, dx), dy2);
    const __m256d d = _mm256_add_pd(dc, _mm256_mul_pd(scale, ds));
    const __m256d best = _mm256_loadu_pd(r.best + i);
    const __m256d lt = _mm256_cmp_pd(d, best, _CMP_LT_OQ);
    _mm256_storeu_pd(r.best + i, _mm256_blendv_pd(best, d, lt));
    const __m128i lt32 = _mm256_castsi256_si128(
        _mm256_permutevar8x32_epi32(_mm256_castpd_si256(lt), pack));
    auto* lbl = reinterpret_cast<__m128i*>(r.label + i);
    const __m128i old = _mm_loadu_si128(lbl);
    _mm_storeu_si128(lbl,
                     _mm_blendv_epi8(old, _mm256_castsi256_si128(id), lt32));
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

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", weighted_accumulate, divide,
                                 threshold, slic_assign};
  return table;
}

}  // namespace handseg::kernels
