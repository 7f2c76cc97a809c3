#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "handseg/grid.hpp"
#include "handseg/pipeline.hpp"

namespace handseg {

struct BinaryCounts {
  std::int64_t tp = 0, fp = 0, fn = 0;
  void add(const BinaryMask& pred, const BinaryMask& truth);
  /// 1 when neither side has positives.
  double f1() const;
};

/// F1 of the positive class; 1 when both masks are empty.
double binary_f1(const BinaryMask& pred, const BinaryMask& truth);

/// Rows are the true class, columns the predicted class, both ordered
/// {no-hand, left, right}.
struct ConfusionMatrix3 {
  std::array<std::array<std::int64_t, 3>, 3> counts{};

  void add(const LRMask& pred, const LRMask& truth);
  void merge(const ConfusionMatrix3& other);
  std::int64_t row_total(int row) const;
  std::int64_t total() const;
  /// Row-normalised proportions (rows with no pixels stay zero).
  std::array<std::array<double, 3>, 3> normalized() const;
};

ConfusionMatrix3 confusion_3class(const LRMask& pred, const LRMask& truth);

/// Contour-level identification. counts[t][p]: truth hand t (0 left,
/// 1 right) matched by a predicted segment labelled p.
struct IdentificationAccuracy {
  std::array<std::array<std::int64_t, 2>, 2> counts{};
  std::int64_t unmatched = 0;

  void merge(const IdentificationAccuracy& other);
  double left() const;   // 1 when no left hands were matched
  double right() const;
};

/// Matches each predicted hand region to the truth hand it overlaps most
/// (ties to the larger truth region) and tallies label agreement.
IdentificationAccuracy identification_accuracy(std::span<const FrameResult> results,
                                               std::span<const LRMask> truth);
void add_identification(IdentificationAccuracy& acc, const LRMask& pred,
                        const LRMask& truth);

struct OcclusionStats {
  std::int64_t truth_occluded = 0;
  std::int64_t detected = 0;     // truth-occluded frames flagged
  std::int64_t false_flags = 0;  // flagged frames without truth occlusion
  /// Detection rate over truth-occluded frames (1 when there are none).
  double rate() const;
};

OcclusionStats occlusion_rate(std::span<const FrameResult> results,
                              std::span<const bool> truth_flags);

/// Everything measured for one video.
struct VideoEval {
  std::string name;
  std::int64_t frames = 0;
  BinaryCounts binary;
  ConfusionMatrix3 confusion;           // all frames
  ConfusionMatrix3 occluded_confusion;  // frames flagged as occluded only
  IdentificationAccuracy identification;
  bool has_occlusion_truth = false;
  OcclusionStats occlusion;
};

/// Scores predictions against aligned truth. `flagged` marks frames the
/// pipeline flagged as occluded (may be empty); `truth_flags` likewise.
VideoEval evaluate_video(const std::string& name, std::span<const LRMask> pred,
                         std::span<const LRMask> truth,
                         std::span<const bool> flagged,
                         std::span<const bool> truth_flags);

/// Machine-readable report: per-video blocks plus an aggregate.
std::string report_to_json(std::span<const VideoEval> videos);

}  // namespace handseg
