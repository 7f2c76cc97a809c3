#include "handseg/kernels.hpp"

namespace handseg::kernels {

namespace {

void weighted_accumulate(double* acc, const double* src, double weight,
                         std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) acc[i] = acc[i] + weight * src[i];
}

void divide(double* v, double divisor, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) v[i] = v[i] / divisor;
}

void threshold(const double* v, double t, std::uint8_t* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = v[i] > t ? 1 : 0;
}

void slic_assign(const SlicRun& r) {
  const double dy = r.y - r.cy;
  const double dy2 = dy * dy;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double dl = r.l[i] - r.cl;
    const double da = r.a[i] - r.ca;
    const double db = r.b[i] - r.cb;
    const double dc = (dl * dl + da * da) + db * db;
    const double dx = (r.x0 + static_cast<double>(i)) - r.cx;
    const double ds = dx * dx + dy2;
    const double d = dc + r.spatial_scale * ds;
    if (d < r.best[i]) {
      r.best[i] = d;
      r.label[i] = r.id;
    }
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", weighted_accumulate, divide,
                                 threshold, slic_assign};
  return table;
}

}  // namespace handseg::kernels
