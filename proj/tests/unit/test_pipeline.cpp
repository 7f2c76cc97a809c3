#include <numbers>

#include "doctest.h"
#include "handseg/error.hpp"
#include "handseg/eval.hpp"
#include "handseg/pipeline.hpp"
#include "handseg/scene.hpp"

using namespace handseg;

namespace {

// Pool trained on the first frame of a default scene.
const ModelPool& scene_pool() {
  static const ModelPool pool = [] {
    SceneParams p;
    p.frames = 1;
    const auto s = generate_scene(p);
    BinaryMask m(s[0].truth.width(), s[0].truth.height());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = s[0].truth[i] != 0;
    PoolParams pp;
    pp.forest.n_trees = 4;
    pp.forest.max_depth = 8;
    pp.samples_per_class = 5000;
    return build_pool({{s[0].frame, m, "scene"}}, pp);
  }();
  return pool;
}

PipelineConfig native() {
  PipelineConfig c;
  c.working_width = 0;
  c.superpixels.target_count = 200;
  return c;
}

double agreement(const LRMask& a, const LRMask& b) {
  std::int64_t hand = 0, same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (b[i] == 0) continue;
    ++hand;
    same += a[i] == b[i];
  }
  return hand ? static_cast<double>(same) / hand : 1.0;
}

}  // namespace

TEST_CASE("frame without skin gives an empty mask") {
  Frame f(120, 90);
  for (int y = 0; y < 90; ++y)
    for (int x = 0; x < 120; ++x) f.set(x, y, {40, 70, 110});
  const auto [r, st] = process_frame(LRState{}, f, native(), scene_pool(), LRModel{});
  CHECK(count_nonzero(r.lr_mask) == 0);
  CHECK(r.segments.empty());
  CHECK_FALSE(r.occlusion_flag);
  CHECK_FALSE(st.has_left());
  CHECK_FALSE(st.has_right());
}

TEST_CASE("two inward-tilted blobs get left and right") {
  SceneParams p;
  p.frames = 1;
  const auto s = generate_scene(p);
  const auto [r, st] = process_frame(LRState{}, s[0].frame, native(), scene_pool(), LRModel{});
  REQUIRE(r.segments.size() == 2);
  CHECK(agreement(r.lr_mask, s[0].truth) > 0.95);
  CHECK(st.has_both());
  CHECK(st.superpixels.has_value());
  for (const auto& seg : r.segments)
    CHECK((seg.label == HandLabel::kLeft) == (seg.features.x < 0.5));
}

TEST_CASE("merging blobs are flagged and split") {
  SceneParams p;
  p.frames = 30;
  p.merges.push_back({0, 14, 10, 2.0});
  const auto s = generate_scene(p);
  std::vector<Frame> frames;
  for (const auto& f : s) frames.push_back(f.frame);
  const auto results = process_video(frames, native(), scene_pool(), LRModel{});
  REQUIRE(results.size() == s.size());
  int occluded = 0, flagged = 0;
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (!s[t].occluded) continue;
    ++occluded;
    flagged += results[t].occlusion_flag;
    if (results[t].split_applied) CHECK(agreement(results[t].lr_mask, s[t].truth) >= 0.9);
  }
  CHECK(occluded > 0);
  CHECK(flagged == occluded);
}

TEST_CASE("left and right pixels are always disjoint classes") {
  SceneParams p;
  p.frames = 10;
  p.merges.push_back({0, 8, 2, 3.0});
  const auto s = generate_scene(p);
  std::vector<Frame> frames;
  for (const auto& f : s) frames.push_back(f.frame);
  for (const auto& r : process_video(frames, native(), scene_pool(), LRModel{})) {
    for (auto v : r.lr_mask.values()) CHECK(v <= 2);
    int left = 0, right = 0;
    for (const auto& seg : r.segments) (seg.label == HandLabel::kLeft ? left : right)++;
    CHECK(left <= 1);
    CHECK(right <= 1);
  }
}

TEST_CASE("stride and frame indexes") {
  SceneParams p;
  p.frames = 10;
  const auto s = generate_scene(p);
  std::vector<Frame> frames;
  for (const auto& f : s) frames.push_back(f.frame);
  PipelineConfig c = native();
  c.sample_stride = 2;
  const auto r = process_video(frames, c, scene_pool(), LRModel{});
  REQUIRE(r.size() == 5);
  for (std::size_t i = 0; i < r.size(); ++i) CHECK(r[i].frame_index == static_cast<std::int64_t>(2 * i));

  const std::vector<Frame> single{frames[0]};
  const auto one = process_video(single, native(), scene_pool(), LRModel{});
  REQUIRE(one.size() == 1);
  CHECK_FALSE(one[0].occlusion_flag);
  CHECK_THROWS_AS(process_video({}, native(), scene_pool(), LRModel{}), DataError);
}

TEST_CASE("inconsistent frame sizes are rejected") {
  SceneParams p;
  p.frames = 1;
  const auto s = generate_scene(p);
  std::vector<Frame> frames{s[0].frame, resample(s[0].frame, 200)};
  CHECK_THROWS_AS(process_video(frames, native(), scene_pool(), LRModel{}), DataError);
}

TEST_CASE("working resolution output is returned at native size") {
  SceneParams p;
  p.frames = 1;
  const auto s = generate_scene(p);
  PipelineConfig c = native();
  c.working_width = 160;
  c.superpixels.target_count = 100;
  const auto [r, st] = process_frame(LRState{}, s[0].frame, c, scene_pool(), LRModel{});
  CHECK(r.lr_mask.width() == s[0].frame.width());
  CHECK(r.lr_mask.height() == s[0].frame.height());
  CHECK(agreement(r.lr_mask, s[0].truth) > 0.9);
}

TEST_CASE("processing is deterministic") {
  SceneParams p;
  p.frames = 12;
  p.merges.push_back({0, 8, 2, 3.0});
  const auto s = generate_scene(p);
  std::vector<Frame> frames;
  for (const auto& f : s) frames.push_back(f.frame);
  const auto a = process_video(frames, native(), scene_pool(), LRModel{});
  const auto b = process_video(frames, native(), scene_pool(), LRModel{});
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].lr_mask == b[i].lr_mask);
    CHECK(a[i].occlusion_flag == b[i].occlusion_flag);
  }
}

TEST_CASE("config json round trip and validation") {
  PipelineConfig c;
  c.segment.k = 3;
  c.segment.lambda = 0.8;
  c.superpixels.m = 20;
  c.postprocess.area_rule = AreaRule::kFractionOfWidthSquared;
  c.sample_stride = 4;
  c.enable_split = false;
  const PipelineConfig back = config_from_json(config_to_json(c));
  CHECK(back.segment.k == 3);
  CHECK(back.segment.lambda == 0.8);
  CHECK(back.superpixels.m == 20);
  CHECK(back.postprocess.area_rule == AreaRule::kFractionOfWidthSquared);
  CHECK(back.sample_stride == 4);
  CHECK_FALSE(back.enable_split);
  CHECK(config_from_json("{}").segment.k == 5);
  CHECK_THROWS_AS(config_from_json("{\"lambda\": 1.5}"), ParamError);
  CHECK_THROWS_AS(config_from_json("{\"sample_stride\": 0}"), ParamError);
  CHECK_THROWS_AS(config_from_json("{\"k_fuse\": \"five\"}"), ParamError);
  CHECK_THROWS_AS(config_from_json("{\"postprocess\": {\"area_rule\": \"x\"}}"), ParamError);
}
