#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "handseg/error.hpp"

namespace handseg {

/// Row-major width x height array of T. The tag keeps masks with different
/// meanings (binary, three-class, probabilities) from mixing silently.
template <typename T, typename Tag>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height) {
    if (width < 0 || height < 0) throw ParamError("negative grid dimensions");
    values_.assign(static_cast<std::size_t>(width) * height, fill);
  }
  Grid(int width, int height, std::vector<T> values)
      : width_(width), height_(height), values_(std::move(values)) {
    if (width < 0 || height < 0 ||
        values_.size() != static_cast<std::size_t>(width) * height)
      throw DataError("grid buffer does not match its dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  T& at(int x, int y) { return values_[index(x, y)]; }
  const T& at(int x, int y) const { return values_[index(x, y)]; }
  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }
  bool contains(int x, int y) const {
    return x >= 0 && y >= 0 && x < width_ && y < height_;
  }
  bool same_shape(int w, int h) const { return w == width_ && h == height_; }
  template <typename U, typename G>
  bool same_shape(const Grid<U, G>& other) const {
    return same_shape(other.width(), other.height());
  }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::vector<T>& storage() { return values_; }
  const std::vector<T>& storage() const { return values_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> values_;
};

struct BinaryTag {};
struct LRTag {};
struct ProbabilityTag {};

/// Per-pixel {0, 1}.
using BinaryMask = Grid<std::uint8_t, BinaryTag>;
/// Per-pixel skin probability in [0, 1].
using ProbabilityMap = Grid<double, ProbabilityTag>;

/// Three-class label values used by LRMask.
enum class PixelClass : std::uint8_t { kBackground = 0, kLeft = 1, kRight = 2 };

/// Per-pixel {background = 0, left = 1, right = 2}.
using LRMask = Grid<std::uint8_t, LRTag>;

/// Number of nonzero entries.
template <typename T, typename Tag>
std::int64_t count_nonzero(const Grid<T, Tag>& g) {
  std::int64_t n = 0;
  for (const T& v : g.values()) n += (v != T{}) ? 1 : 0;
  return n;
}

/// Binary mask of the pixels of `m` equal to `cls`.
BinaryMask class_mask(const LRMask& m, PixelClass cls);

}  // namespace handseg
