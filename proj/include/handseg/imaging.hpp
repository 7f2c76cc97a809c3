#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "handseg/grid.hpp"

namespace handseg {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// An 8-bit RGB video frame. Pixels are row-major RGB triples.
class Frame {
 public:
  Frame() = default;
  Frame(int width, int height, std::int64_t index = 0);
  Frame(int width, int height, std::vector<std::uint8_t> pixels,
        std::int64_t index = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  std::int64_t index() const { return index_; }
  void set_index(std::int64_t i) { index_ = i; }

  Rgb at(int x, int y) const {
    const std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
    return {pixels_[o], pixels_[o + 1], pixels_[o + 2]};
  }
  Rgb at(std::size_t i) const {
    return {pixels_[3 * i], pixels_[3 * i + 1], pixels_[3 * i + 2]};
  }
  void set(int x, int y, Rgb c) {
    const std::size_t o = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[o] = c.r;
    pixels_[o + 1] = c.g;
    pixels_[o + 2] = c.b;
  }

  const std::vector<std::uint8_t>& pixels() const { return pixels_; }
  std::vector<std::uint8_t>& pixels() { return pixels_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::int64_t index_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// CIELAB colour, D65 white point.
struct LabPixel {
  double l = 0.0;
  double a = 0.0;
  double b = 0.0;
};

/// Structure-of-arrays LAB image, one plane per channel.
struct LabImage {
  int width = 0;
  int height = 0;
  std::vector<double> l;
  std::vector<double> a;
  std::vector<double> b;

  LabPixel at(std::size_t i) const { return {l[i], a[i], b[i]}; }
};

LabPixel rgb_to_lab(Rgb c);
LabImage to_lab(const Frame& frame);

struct HsvPixel {
  double h = 0.0;  // degrees, [0, 360)
  double s = 0.0;  // [0, 1]
  double v = 0.0;  // [0, 1]
};

HsvPixel rgb_to_hsv(Rgb c);

struct BinConfig {
  int h_bins = 8;
  int s_bins = 8;
  int v_bins = 8;

  int total() const { return h_bins * s_bins * v_bins; }
  friend bool operator==(const BinConfig&, const BinConfig&) = default;
};

/// Flattened joint HSV histogram, L1-normalised. Bin (h, s, v) lives at
/// (h * s_bins + s) * v_bins + v.
struct GlobalFeature {
  std::vector<double> bins;
  BinConfig config;
};

/// Flat bin index of one pixel under `config`.
int hsv_bin(Rgb c, const BinConfig& config);

GlobalFeature hsv_histogram(const Frame& frame, const BinConfig& config = {});

/// Euclidean distance between two histograms with the same bin layout.
double feature_distance(const GlobalFeature& a, const GlobalFeature& b);

/// Bilinear resample to `target_width`, preserving aspect ratio (height is
/// rounded to the nearest integer, at least 1).
Frame resample(const Frame& frame, int target_width);

/// Nearest-neighbour resample, used for label maps.
template <typename T, typename Tag>
Grid<T, Tag> resample_nearest(const Grid<T, Tag>& g, int width, int height) {
  if (g.same_shape(width, height)) return g;
  Grid<T, Tag> out(width, height);
  for (int y = 0; y < height; ++y) {
    const int sy = std::min(g.height() - 1,
                            static_cast<int>((y + 0.5) * g.height() / height));
    for (int x = 0; x < width; ++x) {
      const int sx = std::min(g.width() - 1,
                              static_cast<int>((x + 0.5) * g.width() / width));
      out.at(x, y) = g.at(sx, sy);
    }
  }
  return out;
}

}  // namespace handseg
