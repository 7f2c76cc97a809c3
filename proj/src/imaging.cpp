#include "handseg/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace handseg {

namespace {

// sRGB companding, tabulated for 8-bit inputs.
std::array<double, 256> make_linear_table() {
  std::array<double, 256> t{};
  for (int i = 0; i < 256; ++i) {
    const double c = i / 255.0;
    t[i] = c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
  }
  return t;
}

const std::array<double, 256>& linear_table() {
  static const std::array<double, 256> table = make_linear_table();
  return table;
}

// Linear sRGB -> XYZ (D65).
constexpr double kM[3][3] = {{0.4124564, 0.3575761, 0.1804375},
                             {0.2126729, 0.7151522, 0.0721750},
                             {0.0193339, 0.1191920, 0.9503041}};
// White point as the row sums of the matrix.
constexpr double kXn = kM[0][0] + kM[0][1] + kM[0][2];
constexpr double kYn = kM[1][0] + kM[1][1] + kM[1][2];
constexpr double kZn = kM[2][0] + kM[2][1] + kM[2][2];

constexpr double kEpsilon = 216.0 / 24389.0;  // (6/29)^3
constexpr double kKappa = 24389.0 / 27.0;

double lab_f(double t) {
  return t > kEpsilon ? std::cbrt(t) : (kKappa * t + 16.0) / 116.0;
}

}  // namespace

Frame::Frame(int width, int height, std::int64_t index)
    : width_(width), height_(height), index_(index) {
  if (width <= 0 || height <= 0) throw DataError("empty frame");
  pixels_.assign(pixel_count() * 3, 0);
}

Frame::Frame(int width, int height, std::vector<std::uint8_t> pixels,
             std::int64_t index)
    : width_(width), height_(height), index_(index), pixels_(std::move(pixels)) {
  if (width <= 0 || height <= 0) throw DataError("empty frame");
  if (pixels_.size() != pixel_count() * 3)
    throw DataError("pixel buffer length does not match frame dimensions");
}

LabPixel rgb_to_lab(Rgb c) {
  const auto& lin = linear_table();
  const double r = lin[c.r], g = lin[c.g], b = lin[c.b];
  const double x = kM[0][0] * r + kM[0][1] * g + kM[0][2] * b;
  const double y = kM[1][0] * r + kM[1][1] * g + kM[1][2] * b;
  const double z = kM[2][0] * r + kM[2][1] * g + kM[2][2] * b;
  const double fx = lab_f(x / kXn);
  const double fy = lab_f(y / kYn);
  const double fz = lab_f(z / kZn);
  return {std::clamp(116.0 * fy - 16.0, 0.0, 100.0), 500.0 * (fx - fy),
          200.0 * (fy - fz)};
}

LabImage to_lab(const Frame& frame) {
  LabImage out;
  out.width = frame.width();
  out.height = frame.height();
  const std::size_t n = frame.pixel_count();
  out.l.resize(n);
  out.a.resize(n);
  out.b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const LabPixel p = rgb_to_lab(frame.at(i));
    out.l[i] = p.l;
    out.a[i] = p.a;
    out.b[i] = p.b;
  }
  return out;
}

HsvPixel rgb_to_hsv(Rgb c) {
  const int mx = std::max({c.r, c.g, c.b});
  const int mn = std::min({c.r, c.g, c.b});
  const int delta = mx - mn;
  HsvPixel out;
  out.v = mx / 255.0;
  out.s = mx == 0 ? 0.0 : static_cast<double>(delta) / mx;
  if (delta == 0) return out;
  double h;
  if (mx == c.r)
    h = 60.0 * (static_cast<double>(c.g - c.b) / delta);
  else if (mx == c.g)
    h = 60.0 * (static_cast<double>(c.b - c.r) / delta) + 120.0;
  else
    h = 60.0 * (static_cast<double>(c.r - c.g) / delta) + 240.0;
  if (h < 0.0) h += 360.0;
  out.h = h;
  return out;
}

int hsv_bin(Rgb c, const BinConfig& config) {
  const int mx = std::max({c.r, c.g, c.b});
  const int mn = std::min({c.r, c.g, c.b});
  const std::int64_t delta = mx - mn;
  std::int64_t h = 0;  // hue in units of 60 degrees, scaled by delta
  if (delta > 0) {
    if (mx == c.r)
      h = c.g - c.b;
    else if (mx == c.g)
      h = (c.b - c.r) + 2 * delta;
    else
      h = (c.r - c.g) + 4 * delta;
    if (h < 0) h += 6 * delta;
  }
  const auto bin = [](std::int64_t num, std::int64_t den, int n) {
    if (den == 0) return 0;
    return static_cast<int>(std::min<std::int64_t>(n - 1, num * n / den));
  };
  const int hb = bin(h, 6 * delta, config.h_bins);
  const int sb = bin(delta, mx, config.s_bins);
  const int vb = bin(mx, 255, config.v_bins);
  return (hb * config.s_bins + sb) * config.v_bins + vb;
}

GlobalFeature hsv_histogram(const Frame& frame, const BinConfig& config) {
  if (frame.pixel_count() == 0) throw DataError("empty frame");
  if (config.h_bins < 1 || config.s_bins < 1 || config.v_bins < 1)
    throw ParamError("histogram bin counts must be >= 1");
  std::vector<std::int64_t> counts(config.total(), 0);
  for (std::size_t i = 0; i < frame.pixel_count(); ++i)
    ++counts[hsv_bin(frame.at(i), config)];
  GlobalFeature gf;
  gf.config = config;
  gf.bins.resize(counts.size());
  const double n = static_cast<double>(frame.pixel_count());
  for (std::size_t i = 0; i < counts.size(); ++i) gf.bins[i] = counts[i] / n;
  return gf;
}

double feature_distance(const GlobalFeature& a, const GlobalFeature& b) {
  if (a.bins.size() != b.bins.size())
    throw DataError("global features have different bin layouts");
  double s = 0.0;
  for (std::size_t i = 0; i < a.bins.size(); ++i) {
    const double d = a.bins[i] - b.bins[i];
    s += d * d;
  }
  return std::sqrt(s);
}

Frame resample(const Frame& frame, int target_width) {
  if (target_width <= 0) throw ParamError("target width must be positive");
  if (target_width == frame.width()) return frame;
  const int target_height = std::max(
      1, static_cast<int>(std::lround(static_cast<double>(frame.height()) *
                                      target_width / frame.width())));
  Frame out(target_width, target_height, frame.index());
  const double sx = static_cast<double>(frame.width()) / target_width;
  const double sy = static_cast<double>(frame.height()) / target_height;
  const int w = frame.width(), h = frame.height();
  const auto& src = frame.pixels();
  auto& dst = out.pixels();
  for (int y = 0; y < target_height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, h - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - y0;
    for (int x = 0; x < target_width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, w - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const auto px = [&](int xx, int yy) {
          return static_cast<double>(
              src[(static_cast<std::size_t>(yy) * w + xx) * 3 + c]);
        };
        const double top = px(x0, y0) + (px(x1, y0) - px(x0, y0)) * tx;
        const double bot = px(x0, y1) + (px(x1, y1) - px(x0, y1)) * tx;
        const double v = top + (bot - top) * ty;
        dst[(static_cast<std::size_t>(y) * target_width + x) * 3 + c] =
            static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

BinaryMask class_mask(const LRMask& m, PixelClass cls) {
  BinaryMask out(m.width(), m.height());
  const auto v = static_cast<std::uint8_t>(cls);
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] == v ? 1 : 0;
  return out;
}

}  // namespace handseg
