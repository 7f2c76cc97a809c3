#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "handseg/grid.hpp"

namespace handseg {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

/// Outer boundary of one 8-connected component, with the region it encloses
/// (the component plus any holes).
struct Contour {
  std::vector<Point> boundary;       // Moore-traced, clockwise in image coords
  std::vector<std::int32_t> region;  // filled pixel indexes, ascending
  std::int64_t area = 0;             // == region.size()
};

std::vector<Contour> extract_contours(const BinaryMask& mask);

/// Binary mask of a contour's filled region.
BinaryMask region_mask(const Contour& c, int width, int height);

enum class AreaRule {
  /// area < (factor * w)^2 is removed.
  kSquaredWidthFraction,
  /// area < factor * w^2 is removed.
  kFractionOfWidthSquared,
};

struct FilterParams {
  double min_area_factor = 0.1;
  AreaRule area_rule = AreaRule::kSquaredWidthFraction;
  /// Max distance, as a fraction of min(w, h), from the left, bottom or
  /// right border.
  double margin_factor = 0.05;
  std::size_t keep = 3;
};

/// Border and area rules, then the `keep` largest by area (descending,
/// stable on ties).
std::vector<Contour> filter_contours(std::vector<Contour> contours, int width,
                                     int height, const FilterParams& params = {});

struct EllipseFit {
  double cx = 0.0;
  double cy = 0.0;
  double major = 0.0;  // semi-axes
  double minor = 0.0;
  /// Major-axis angle, anticlockwise from the bottom border with y pointing
  /// up, in [0, pi).
  double orientation = 0.0;
};

/// Direct least-squares ellipse fit. Throws DataError("degenerate contour")
/// for fewer than 6 points or point sets with no ellipse solution.
EllipseFit fit_ellipse(std::span<const Point> points);
EllipseFit fit_ellipse(std::span<const double> xs, std::span<const double> ys);
inline EllipseFit fit_ellipse(const Contour& c) { return fit_ellipse(c.boundary); }

struct EllipseFeatures {
  double x = 0.0;      // centre x / frame width, [0, 1]
  double theta = 0.0;  // [0, pi]
};

EllipseFeatures extract_features(const EllipseFit& e, int width, int height);

}  // namespace handseg
