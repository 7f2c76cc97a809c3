#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "handseg/forest.hpp"
#include "handseg/grid.hpp"
#include "handseg/imaging.hpp"

namespace handseg {

/// One pixel classifier plus the global appearance of the frame it was
/// trained on.
struct IlluminationModel {
  Forest forest;
  GlobalFeature global_feature;
  std::string source_id;
};

struct TrainingPair {
  Frame frame;
  BinaryMask mask;
  std::string source_id;
};

struct PoolParams {
  ForestParams forest;
  BinConfig bins;
  /// Per-class cap on pixels sampled from one training frame; 0 = no cap.
  std::size_t samples_per_class = 50'000;
};

/// Illumination models with an exact nearest-neighbour index over their
/// global features. Immutable after construction.
class ModelPool {
 public:
  ModelPool() = default;
  explicit ModelPool(std::vector<IlluminationModel> models);

  std::size_t size() const { return models_.size(); }
  const IlluminationModel& model(std::size_t i) const { return models_[i]; }
  const std::vector<IlluminationModel>& models() const { return models_; }
  const BinConfig& bins() const { return models_.front().global_feature.config; }

  /// Indexes of the k nearest models, by non-decreasing Euclidean distance,
  /// ties to the lower index.
  std::vector<std::size_t> recommend(const GlobalFeature& gf,
                                     std::size_t k) const;

 private:
  std::vector<IlluminationModel> models_;
};

struct BuildReport {
  std::vector<std::string> skipped;  // source ids with single-class masks
};

/// Pixel samples for one (frame, mask) pair, class-balanced down to
/// `samples_per_class` with a deterministic draw.
std::vector<PixelSample> sample_pixels(const Frame& frame,
                                       const BinaryMask& mask,
                                       std::size_t samples_per_class,
                                       std::uint64_t seed);

/// Builds one model per usable pair. Single-class masks are skipped and
/// listed in `report`; throws if nothing is left.
ModelPool build_pool(const std::vector<TrainingPair>& pairs,
                     const PoolParams& params, BuildReport* report = nullptr);

/// Normalised decayed average of probability maps ordered nearest first:
/// sum_j lambda^j S_j / sum_j lambda^j, j = 1..K.
ProbabilityMap fuse(std::span<const ProbabilityMap> maps, double lambda);

/// The decay weights lambda^1 .. lambda^k.
std::vector<double> fusion_weights(double lambda, std::size_t k);

struct SegmentParams {
  std::size_t k = 5;
  double lambda = 0.9;
  double threshold = 0.5;
};

/// Values strictly above `threshold` become 1.
BinaryMask binarize(const ProbabilityMap& map, double threshold);

/// Histogram -> recommend -> per-model prediction -> fuse -> binarize. Uses
/// min(k, pool size) models.
BinaryMask segment(const ModelPool& pool, const Frame& frame,
                   const SegmentParams& params);
/// Same, reusing a precomputed LAB image of `frame`.
BinaryMask segment(const ModelPool& pool, const Frame& frame,
                   const LabImage& lab, const SegmentParams& params);

// Pool container: "HSPOOL\0\0", u32 version, then little-endian records.
inline constexpr std::uint32_t kPoolFormatVersion = 1;
void save_pool(const ModelPool& pool, std::ostream& out);
ModelPool load_pool(std::istream& in);
void save_pool(const ModelPool& pool, const std::filesystem::path& path);
ModelPool load_pool(const std::filesystem::path& path);

}  // namespace handseg
