#include "handseg/slic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "handseg/error.hpp"
#include "handseg/kernels.hpp"

namespace handseg {

void SlicParams::validate() const {
  if (target_count < 1) throw ParamError("superpixel target_count must be >= 1");
  if (!(m > 0.0)) throw ParamError("superpixel spatial weight m must be > 0");
  if (iterations < 0) throw ParamError("superpixel iterations must be >= 0");
}

std::vector<SlicCenter> slic_seeds(const LabImage& lab, int target_count,
                                   double* step) {
  const int w = lab.width, h = lab.height;
  const double n = static_cast<double>(w) * h;
  if (target_count < 1 || target_count > n)
    throw ParamError("superpixel target_count exceeds pixel count");
  const double s = std::sqrt(n / target_count);
  if (step) *step = s;
  const int cols = std::max(1, static_cast<int>(std::lround(w / s)));
  const int rows = std::max(1, static_cast<int>(std::lround(h / s)));
  const double sx = static_cast<double>(w) / cols;
  const double sy = static_cast<double>(h) / rows;

  const auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  const auto gradient = [&](int x, int y) {
    const int xl = std::max(x - 1, 0), xr = std::min(x + 1, w - 1);
    const int yu = std::max(y - 1, 0), yd = std::min(y + 1, h - 1);
    const auto sq = [&](std::size_t p, std::size_t q) {
      const double dl = lab.l[p] - lab.l[q], da = lab.a[p] - lab.a[q],
                   db = lab.b[p] - lab.b[q];
      return dl * dl + da * da + db * db;
    };
    return sq(idx(xr, y), idx(xl, y)) + sq(idx(x, yd), idx(x, yu));
  };

  std::vector<SlicCenter> centers;
  centers.reserve(static_cast<std::size_t>(cols) * rows);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int bx = std::min(w - 1, static_cast<int>((c + 0.5) * sx));
      int by = std::min(h - 1, static_cast<int>((r + 0.5) * sy));
      double best = gradient(bx, by);
      const int ox = bx, oy = by;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = ox + dx, y = oy + dy;
          if (x < 0 || y < 0 || x >= w || y >= h) continue;
          const double g = gradient(x, y);
          if (g < best) {
            best = g;
            bx = x;
            by = y;
          }
        }
      }
      const std::size_t i = idx(bx, by);
      centers.push_back({lab.l[i], lab.a[i], lab.b[i], static_cast<double>(bx),
                         static_cast<double>(by)});
    }
  }
  return centers;
}

SlicClustering slic_cluster(const LabImage& lab, const SlicParams& params) {
  params.validate();
  const int w = lab.width, h = lab.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  SlicClustering out;
  out.centers = slic_seeds(lab, params.target_count, &out.step);
  const double s = out.step;
  const double scale = (params.m * params.m) / (s * s);
  const auto& kern = kernels::active_kernels();

  std::vector<double> best(n);
  out.labels.assign(n, -1);
  struct Sums {
    double l, a, b, x, y;
    std::int64_t count;
  };
  std::vector<Sums> sums(out.centers.size());

  for (int it = 0; it < std::max(1, params.iterations); ++it) {
    std::fill(best.begin(), best.end(), std::numeric_limits<double>::infinity());
    std::fill(out.labels.begin(), out.labels.end(), -1);
    for (std::size_t k = 0; k < out.centers.size(); ++k) {
      const SlicCenter& c = out.centers[k];
      const int x0 = std::max(0, static_cast<int>(std::ceil(c.x - s)));
      const int x1 = std::min(w - 1, static_cast<int>(std::floor(c.x + s)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(c.y - s)));
      const int y1 = std::min(h - 1, static_cast<int>(std::floor(c.y + s)));
      if (x1 < x0) continue;
      for (int y = y0; y <= y1; ++y) {
        const std::size_t o = static_cast<std::size_t>(y) * w + x0;
        kernels::SlicRun run;
        run.l = lab.l.data() + o;
        run.a = lab.a.data() + o;
        run.b = lab.b.data() + o;
        run.best = best.data() + o;
        run.label = out.labels.data() + o;
        run.n = static_cast<std::size_t>(x1 - x0 + 1);
        run.x0 = x0;
        run.y = y;
        run.cl = c.l;
        run.ca = c.a;
        run.cb = c.b;
        run.cx = c.x;
        run.cy = c.y;
        run.spatial_scale = scale;
        run.id = static_cast<std::int32_t>(k);
        kern.slic_assign(run);
      }
    }
    if (params.iterations == 0) break;  // one assignment against the seeds
    std::fill(sums.begin(), sums.end(), Sums{0, 0, 0, 0, 0, 0});
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        const std::int32_t k = out.labels[i];
        if (k < 0) continue;
        Sums& su = sums[static_cast<std::size_t>(k)];
        su.l += lab.l[i];
        su.a += lab.a[i];
        su.b += lab.b[i];
        su.x += x;
        su.y += y;
        ++su.count;
      }
    }
    for (std::size_t k = 0; k < sums.size(); ++k) {
      const Sums& su = sums[k];
      if (su.count == 0) continue;
      const double c = static_cast<double>(su.count);
      out.centers[k] = {su.l / c, su.a / c, su.b / c, su.x / c, su.y / c};
    }
  }
  return out;
}

SuperpixelSet enforce_connectivity(const LabImage& lab,
                                   const SlicClustering& clustering,
                                   const SlicParams& params) {
  const int w = lab.width, h = lab.height;
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const std::vector<std::int32_t>& raw = clustering.labels;

  // Pass 1: 4-connected pieces of each raw cluster, in raster order.
  std::vector<std::int32_t> piece(n, -1);
  struct Piece {
    std::int32_t raw;
    std::vector<std::int32_t> pixels;
    double l = 0, a = 0, b = 0;
  };
  std::vector<Piece> pieces;
  std::vector<std::int32_t> stack;
  constexpr std::array<std::array<int, 2>, 4> k4 = {{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  for (std::size_t s = 0; s < n; ++s) {
    if (piece[s] >= 0) continue;
    const auto id = static_cast<std::int32_t>(pieces.size());
    Piece p;
    p.raw = raw[s];
    piece[s] = id;
    stack.assign(1, static_cast<std::int32_t>(s));
    while (!stack.empty()) {
      const std::int32_t i = stack.back();
      stack.pop_back();
      p.pixels.push_back(i);
      const int x = i % w, y = i / w;
      for (const auto& d : k4) {
        const int nx = x + d[0], ny = y + d[1];
        if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
        const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
        if (piece[q] < 0 && raw[q] == p.raw) {
          piece[q] = id;
          stack.push_back(static_cast<std::int32_t>(q));
        }
      }
    }
    std::sort(p.pixels.begin(), p.pixels.end());
    for (std::int32_t i : p.pixels) {
      p.l += lab.l[i];
      p.a += lab.a[i];
      p.b += lab.b[i];
    }
    const double c = static_cast<double>(p.pixels.size());
    p.l /= c;
    p.a /= c;
    p.b /= c;
    pieces.push_back(std::move(p));
  }

  // Largest piece per raw cluster (first in raster order on ties).
  std::vector<std::int32_t> largest(clustering.centers.size(), -1);
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const std::int32_t r = pieces[i].raw;
    if (r < 0) continue;
    auto& best = largest[static_cast<std::size_t>(r)];
    if (best < 0 || pieces[i].pixels.size() > pieces[best].pixels.size())
      best = static_cast<std::int32_t>(i);
  }
  const double expected = static_cast<double>(n) / params.target_count;
  const auto min_size = std::max<std::size_t>(1, static_cast<std::size_t>(expected / 4));

  std::vector<std::int32_t> assigned(pieces.size(), -1);
  std::int32_t next_id = 0;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const Piece& p = pieces[i];
    const bool orphan = p.raw < 0 || largest[p.raw] != static_cast<std::int32_t>(i) ||
                        p.pixels.size() < min_size;
    if (!orphan) assigned[i] = next_id++;
  }

  // Orphans join an already assigned neighbour, nearest in mean colour.
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      if (assigned[i] >= 0) continue;
      const Piece& p = pieces[i];
      std::int32_t target = -1;
      double best = std::numeric_limits<double>::infinity();
      for (std::int32_t px : p.pixels) {
        const int x = px % w, y = px / w;
        for (const auto& d : k4) {
          const int nx = x + d[0], ny = y + d[1];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const std::int32_t q = piece[static_cast<std::size_t>(ny) * w + nx];
          if (q == static_cast<std::int32_t>(i) || assigned[q] < 0) continue;
          const Piece& o = pieces[q];
          const double dl = p.l - o.l, da = p.a - o.a, db = p.b - o.b;
          const double dist = dl * dl + da * da + db * db;
          if (dist < best || (dist == best && assigned[q] < target)) {
            best = dist;
            target = assigned[q];
          }
        }
      }
      if (target >= 0) {
        assigned[i] = target;
        changed = true;
      }
    }
  }
  for (std::size_t i = 0; i < pieces.size(); ++i)
    if (assigned[i] < 0) assigned[i] = next_id++;

  SuperpixelSet out;
  out.width = w;
  out.height = h;
  out.params = params;
  out.labels.resize(n);
  out.superpixels.resize(static_cast<std::size_t>(next_id));
  for (std::size_t i = 0; i < n; ++i) {
    const std::int32_t id = assigned[piece[i]];
    out.labels[i] = id;
    out.superpixels[id].pixels.push_back(static_cast<std::int32_t>(i));
  }
  for (std::size_t k = 0; k < out.superpixels.size(); ++k) {
    Superpixel& sp = out.superpixels[k];
    sp.id = static_cast<std::int32_t>(k);
    double l = 0, a = 0, b = 0, x = 0, y = 0;
    for (std::int32_t i : sp.pixels) {
      l += lab.l[i];
      a += lab.a[i];
      b += lab.b[i];
      x += i % w;
      y += i / w;
    }
    const double c = static_cast<double>(sp.pixels.size());
    sp.mean_color = {l / c, a / c, b / c};
    sp.cx = x / c;
    sp.cy = y / c;
  }
  return out;
}

SuperpixelSet compute_superpixels(const LabImage& lab, const SlicParams& params) {
  return enforce_connectivity(lab, slic_cluster(lab, params), params);
}

SuperpixelSet compute_superpixels(const Frame& frame, const SlicParams& params) {
  return compute_superpixels(to_lab(frame), params);
}

double superpixel_distance(const Superpixel& a, const Superpixel& b, double m) {
  const double dl = a.mean_color.l - b.mean_color.l;
  const double da = a.mean_color.a - b.mean_color.a;
  const double db = a.mean_color.b - b.mean_color.b;
  const double dx = a.cx - b.cx, dy = a.cy - b.cy;
  return (dl * dl + da * da + db * db) + m * m * (dx * dx + dy * dy);
}

}  // namespace handseg
