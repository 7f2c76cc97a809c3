#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "handseg/geometry.hpp"
#include "handseg/identify.hpp"
#include "handseg/imaging.hpp"
#include "handseg/occlusion.hpp"
#include "handseg/pool.hpp"
#include "handseg/slic.hpp"

namespace handseg {

struct PipelineConfig {
  std::string pool_path;
  std::string lr_model_path;  // empty: built-in model
  SegmentParams segment;
  SlicParams superpixels;
  FilterParams postprocess;
  int working_width = 600;  // 0 keeps the native width
  int sample_stride = 1;
  bool enable_split = true;

  void validate() const;
};

PipelineConfig config_from_json(const std::string& text,
                                PipelineConfig base = {});
std::string config_to_json(const PipelineConfig& config);
PipelineConfig load_config(const std::filesystem::path& path);

struct SegmentResult {
  Contour contour;  // working-resolution coordinates
  HandLabel label = HandLabel::kLeft;
  EllipseFeatures features;
  double ratio = 1.0;
};

struct FrameResult {
  std::int64_t frame_index = 0;
  LRMask lr_mask;  // native frame resolution
  bool occlusion_flag = false;
  bool split_applied = false;
  std::vector<SegmentResult> segments;
};

/// Post-segmentation stages for one frame at working resolution: contour
/// filtering, occlusion check on the largest blob, optional split, L/R
/// identification and the next temporal state. `lab` must be the LAB image
/// of `frame`.
std::pair<FrameResult, LRState> process_mask(const LRState& state,
                                             const Frame& frame,
                                             const LabImage& lab,
                                             const BinaryMask& hands,
                                             const PipelineConfig& config,
                                             const LRModel& model);

/// Full chain for one frame: resample, segment, then process_mask.
std::pair<FrameResult, LRState> process_frame(const LRState& state,
                                              const Frame& frame,
                                              const PipelineConfig& config,
                                              const ModelPool& pool,
                                              const LRModel& model);

/// Carries LRState across the frames of one video. Keeps a reference to
/// `pool`, which must outlive the processor.
class VideoProcessor {
 public:
  VideoProcessor(const PipelineConfig& config, const ModelPool& pool,
                 const LRModel& model);

  FrameResult process(const Frame& frame);
  const LRState& state() const { return state_; }

 private:
  PipelineConfig config_;
  const ModelPool& pool_;
  LRModel model_;
  LRState state_;
  std::optional<std::pair<int, int>> dims_;
};

/// Applies sample_stride (frames 0, s, 2s, ...) and processes in order.
std::vector<FrameResult> process_video(std::span<const Frame> frames,
                                       const PipelineConfig& config,
                                       const ModelPool& pool,
                                       const LRModel& model);

}  // namespace handseg
