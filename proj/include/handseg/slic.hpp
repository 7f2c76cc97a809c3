#pragma once

#include <cstdint>
#include <vector>

#include "handseg/imaging.hpp"

namespace handseg {

struct SlicParams {
  int target_count = 300;
  double m = 50.0;  // spatial weight
  int iterations = 10;

  void validate() const;
};

struct Superpixel {
  std::int32_t id = 0;
  LabPixel mean_color;
  double cx = 0.0;  // centroid
  double cy = 0.0;
  std::vector<std::int32_t> pixels;  // ascending pixel indexes
};

/// Exact partition of a frame into superpixels; labels[i] is the id of the
/// superpixel holding pixel i and superpixels[id].id == id.
struct SuperpixelSet {
  int width = 0;
  int height = 0;
  std::vector<Superpixel> superpixels;
  std::vector<std::int32_t> labels;
  SlicParams params;
};

/// A cluster centre in (l, a, b, x, y).
struct SlicCenter {
  double l = 0, a = 0, b = 0, x = 0, y = 0;
};

/// Grid seeds moved to the lowest-gradient pixel of their 3x3 neighbourhood.
/// `step` receives the grid interval S = sqrt(N / target_count).
std::vector<SlicCenter> slic_seeds(const LabImage& lab, int target_count,
                                   double* step);

struct SlicClustering {
  std::vector<SlicCenter> centers;
  std::vector<std::int32_t> labels;  // -1 where no centre window reached
  double step = 0.0;
};

/// Windowed k-means under d = |dlab|^2 + (m/S)^2 |dxy|^2, each centre
/// searching pixels within S of it along both axes. No connectivity pass.
SlicClustering slic_cluster(const LabImage& lab, const SlicParams& params);

/// Relabels a raw clustering so every superpixel is 4-connected. Fragments
/// (not the largest piece of their cluster, or smaller than a quarter of the
/// expected superpixel size) merge into the adjacent region with the closest
/// mean colour.
SuperpixelSet enforce_connectivity(const LabImage& lab,
                                   const SlicClustering& clustering,
                                   const SlicParams& params);

SuperpixelSet compute_superpixels(const LabImage& lab, const SlicParams& params);
SuperpixelSet compute_superpixels(const Frame& frame, const SlicParams& params);

/// |a - b|_c^2 + m^2 |a - b|_s^2 over mean colour and centroid.
double superpixel_distance(const Superpixel& a, const Superpixel& b, double m);

}  // namespace handseg
