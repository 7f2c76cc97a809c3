#include "handseg/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "handseg/error.hpp"

namespace handseg {

namespace {

// Clockwise in image coordinates (y down), starting west.
constexpr std::array<Point, 8> kDirs = {{{-1, 0}, {-1, -1}, {0, -1}, {1, -1},
                                         {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int dir_index(Point from, Point to) {
  for (int i = 0; i < 8; ++i)
    if (from.x + kDirs[i].x == to.x && from.y + kDirs[i].y == to.y) return i;
  return 0;
}

std::vector<Point> trace_boundary(const std::vector<std::int32_t>& labels,
                                  int w, int h, Point start, std::int32_t id,
                                  std::size_t pixel_count) {
  const auto inside = [&](Point p) {
    return p.x >= 0 && p.y >= 0 && p.x < w && p.y < h &&
           labels[static_cast<std::size_t>(p.y) * w + p.x] == id;
  };
  std::vector<Point> out = {start};
  Point c = start;
  int back = 0;  // start is the first pixel in raster order: west is outside
  const std::size_t limit = 4 * pixel_count + 8;
  for (std::size_t step = 0; step < limit; ++step) {
    Point next{-1, -1};
    int next_back = 0;
    for (int k = 1; k <= 8; ++k) {
      const int d = (back + k) % 8;
      const Point p{c.x + kDirs[d].x, c.y + kDirs[d].y};
      if (inside(p)) {
        const int prev = (d + 7) % 8;
        const Point q{c.x + kDirs[prev].x, c.y + kDirs[prev].y};
        next = p;
        next_back = dir_index(p, q);
        break;
      }
    }
    if (next.x < 0) break;  // isolated pixel
    if (c == start && out.size() > 1 && next == out[1]) break;
    out.push_back(next);
    c = next;
    back = next_back;
  }
  if (out.size() > 1 && out.back() == start) out.pop_back();
  return out;
}

}  // namespace

std::vector<Contour> extract_contours(const BinaryMask& mask) {
  const int w = mask.width(), h = mask.height();
  std::vector<std::int32_t> labels(mask.size(), -1);
  std::vector<Contour> out;
  std::vector<std::int32_t> stack;
  std::vector<std::int32_t> members;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t s = mask.index(x, y);
      if (!mask[s] || labels[s] >= 0) continue;
      const auto id = static_cast<std::int32_t>(out.size());
      members.clear();
      stack.assign(1, static_cast<std::int32_t>(s));
      labels[s] = id;
      int x0 = x, x1 = x, y0 = y, y1 = y;
      while (!stack.empty()) {
        const std::int32_t i = stack.back();
        stack.pop_back();
        members.push_back(i);
        const int px = i % w, py = i / w;
        x0 = std::min(x0, px);
        x1 = std::max(x1, px);
        y0 = std::min(y0, py);
        y1 = std::max(y1, py);
        for (const Point& d : kDirs) {
          const int nx = px + d.x, ny = py + d.y;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::size_t n = mask.index(nx, ny);
          if (mask[n] && labels[n] < 0) {
            labels[n] = id;
            stack.push_back(static_cast<std::int32_t>(n));
          }
        }
      }

      Contour c;
      c.boundary = trace_boundary(labels, w, h, {x, y}, id, members.size());

      // Fill holes: flood the padded bounding box from outside with
      // 4-connectivity; whatever the flood cannot reach is enclosed.
      const int bw = x1 - x0 + 3, bh = y1 - y0 + 3;
      std::vector<std::uint8_t> outside(static_cast<std::size_t>(bw) * bh, 0);
      const auto blocked = [&](int bx, int by) {
        const int ix = bx + x0 - 1, iy = by + y0 - 1;
        if (ix < 0 || iy < 0 || ix >= w || iy >= h) return false;
        return labels[static_cast<std::size_t>(iy) * w + ix] == id;
      };
      stack.assign(1, 0);
      outside[0] = 1;
      while (!stack.empty()) {
        const std::int32_t i = stack.back();
        stack.pop_back();
        const int bx = i % bw, by = i / bw;
        constexpr std::array<Point, 4> k4 = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
        for (const Point& d : k4) {
          const int nx = bx + d.x, ny = by + d.y;
          if (nx < 0 || ny < 0 || nx >= bw || ny >= bh) continue;
          const std::size_t n = static_cast<std::size_t>(ny) * bw + nx;
          if (!outside[n] && !blocked(nx, ny)) {
            outside[n] = 1;
            stack.push_back(static_cast<std::int32_t>(n));
          }
        }
      }
      for (int by = 1; by < bh - 1; ++by)
        for (int bx = 1; bx < bw - 1; ++bx)
          if (!outside[static_cast<std::size_t>(by) * bw + bx])
            c.region.push_back(static_cast<std::int32_t>(
                (by + y0 - 1) * w + (bx + x0 - 1)));
      c.area = static_cast<std::int64_t>(c.region.size());
      out.push_back(std::move(c));
    }
  }
  return out;
}

BinaryMask region_mask(const Contour& c, int width, int height) {
  BinaryMask m(width, height);
  for (std::int32_t i : c.region) m[static_cast<std::size_t>(i)] = 1;
  return m;
}

std::vector<Contour> filter_contours(std::vector<Contour> contours, int width,
                                     int height, const FilterParams& params) {
  const double margin = params.margin_factor * std::min(width, height);
  const double min_area =
      params.area_rule == AreaRule::kSquaredWidthFraction
          ? (params.min_area_factor * width) * (params.min_area_factor * width)
          : params.min_area_factor * width * static_cast<double>(width);
  std::vector<Contour> kept;
  for (Contour& c : contours) {
    if (static_cast<double>(c.area) < min_area) continue;
    int nearest = std::numeric_limits<int>::max();
    for (const Point& p : c.boundary)
      nearest = std::min({nearest, p.x, width - 1 - p.x, height - 1 - p.y});
    if (nearest > margin) continue;
    kept.push_back(std::move(c));
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const Contour& a, const Contour& b) { return a.area > b.area; });
  if (kept.size() > params.keep) kept.resize(params.keep);
  return kept;
}

EllipseFit fit_ellipse(std::span<const Point> points) {
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const Point& p : points) {
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  return fit_ellipse(xs, ys);
}

EllipseFit fit_ellipse(std::span<const double> xs, std::span<const double> ys) {
  const std::size_t n = xs.size();
  if (n != ys.size()) throw ParamError("coordinate arrays differ in length");
  if (n < 6) throw DataError("degenerate contour");

  // Centre and scale isotropically so the scatter matrix is well conditioned.
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double spread = 0;
  for (std::size_t i = 0; i < n; ++i)
    spread += (xs[i] - mx) * (xs[i] - mx) + (ys[i] - my) * (ys[i] - my);
  const double scale = std::sqrt(spread / (2.0 * n));
  if (!(scale > 0)) throw DataError("degenerate contour");

  Eigen::Matrix3d s1 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d s2 = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d s3 = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const double x = (xs[i] - mx) / scale, y = (ys[i] - my) / scale;
    const Eigen::Vector3d quad(x * x, x * y, y * y);
    const Eigen::Vector3d lin(x, y, 1.0);
    s1 += quad * quad.transpose();
    s2 += quad * lin.transpose();
    s3 += lin * lin.transpose();
  }
  // Halir & Flusser reduction of the constrained problem to a 3x3 eigensystem.
  const Eigen::FullPivLU<Eigen::Matrix3d> s3lu(s3);
  if (!s3lu.isInvertible()) throw DataError("degenerate contour");
  const Eigen::Matrix3d t = -s3lu.inverse() * s2.transpose();
  const Eigen::Matrix3d m = s1 + s2 * t;
  Eigen::Matrix3d reduced;
  reduced.row(0) = m.row(2) / 2.0;
  reduced.row(1) = -m.row(1);
  reduced.row(2) = m.row(0) / 2.0;
  const Eigen::EigenSolver<Eigen::Matrix3d> eig(reduced);
  if (eig.info() != Eigen::Success) throw DataError("degenerate contour");

  int pick = -1;
  double best = 0.0;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector3d v = eig.eigenvectors().col(i).real();
    const double cond = 4.0 * v(0) * v(2) - v(1) * v(1);
    if (cond > best) {
      best = cond;
      pick = i;
    }
  }
  if (pick < 0) throw DataError("degenerate contour");
  const Eigen::Vector3d a1 = eig.eigenvectors().col(pick).real();
  const Eigen::Vector3d a2 = t * a1;
  const double A = a1(0), B = a1(1), C = a1(2), D = a2(0), E = a2(1), F = a2(2);

  const double det = 4.0 * A * C - B * B;
  const double x0 = (B * E - 2.0 * C * D) / det;
  const double y0 = (B * D - 2.0 * A * E) / det;
  const double f0 = A * x0 * x0 + B * x0 * y0 + C * y0 * y0 + D * x0 + E * y0 + F;

  Eigen::Matrix2d q;
  q << A, B / 2.0, B / 2.0, C;
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> qe(q);
  const Eigen::Vector2d lam = qe.eigenvalues();  // ascending
  const double r0 = -f0 / lam(0), r1 = -f0 / lam(1);
  if (!(r0 > 0 && r1 > 0) || !std::isfinite(r0) || !std::isfinite(r1))
    throw DataError("degenerate contour");

  // The smaller |eigenvalue| carries the major axis.
  const bool first_major = r0 >= r1;
  const Eigen::Vector2d axis = qe.eigenvectors().col(first_major ? 0 : 1);
  EllipseFit fit;
  fit.cx = x0 * scale + mx;
  fit.cy = y0 * scale + my;
  fit.major = std::sqrt(std::max(r0, r1)) * scale;
  fit.minor = std::sqrt(std::min(r0, r1)) * scale;
  // Flip y so the angle is anticlockwise from the bottom border.
  double angle = std::atan2(-axis(1), axis(0));
  angle = std::fmod(angle, std::numbers::pi);
  if (angle < 0) angle += std::numbers::pi;
  if (angle >= std::numbers::pi) angle = 0.0;
  fit.orientation = angle;
  return fit;
}

EllipseFeatures extract_features(const EllipseFit& e, int width, int /*height*/) {
  EllipseFeatures f;
  f.x = std::clamp(e.cx / width, 0.0, 1.0);
  f.theta = std::clamp(e.orientation, 0.0, std::numbers::pi);
  return f;
}

}  // namespace handseg
