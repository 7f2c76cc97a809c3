#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "handseg/grid.hpp"
#include "handseg/identify.hpp"
#include "handseg/imaging.hpp"

namespace handseg {

/// One elliptical hand blob. Angles are anticlockwise from +x with y up.
struct SceneHand {
  double cx = 0.0, cy = 0.0;        // pixels
  double major = 60.0, minor = 25.0;  // semi-axes, pixels
  double theta = 0.0;
  double vx = 0.0, vy = 0.0, vtheta = 0.0;  // per frame
  Rgb color{205, 140, 110};
};

/// Additive colour shift applied to every pixel from `start_frame` on.
struct IlluminationRegime {
  std::int64_t start_frame = 0;
  int dr = 0, dg = 0, db = 0;
};

/// Hands approach each other horizontally at `speed` px/frame for
/// `approach` frames, hold for `hold` frames, then retreat symmetrically.
struct MergeEvent {
  std::int64_t start_frame = 0;
  int approach = 10;
  int hold = 5;
  double speed = 2.0;
};

struct SceneParams {
  int width = 320;
  int height = 240;
  int frames = 60;
  std::uint64_t seed = 1;
  SceneHand left{90.0, 200.0, 70.0, 26.0, 0.75};
  SceneHand right{230.0, 200.0, 70.0, 26.0, 3.14159265358979 - 0.75};
  Rgb background_top{40, 70, 110};
  Rgb background_bottom{70, 110, 60};
  int background_noise = 12;  // static texture amplitude
  int skin_noise = 6;
  int temporal_noise = 0;  // per-frame noise amplitude
  double shading = 0.2;    // darkening towards blob edges
  std::vector<IlluminationRegime> regimes;
  std::vector<MergeEvent> merges;
  /// When set, hand poses (x, theta) are redrawn from this model every
  /// `pose_period` frames.
  std::optional<LRModel> pose_model;
  int pose_period = 1;
  bool require_separate_start = true;

  void validate() const;
};

struct SceneFrame {
  Frame frame;
  LRMask truth;
  bool occluded = false;  // hand pixel sets touch or overlap
};

/// Renders the scene. The right hand is drawn over the left.
std::vector<SceneFrame> generate_scene(const SceneParams& params);

std::string scene_to_json(const SceneParams& params);

}  // namespace handseg
