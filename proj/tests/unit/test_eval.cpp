#include "doctest.h"
#include "handseg/error.hpp"
#include "handseg/eval.hpp"
#include "json.hpp"

using namespace handseg;

namespace {

LRMask from_rows(int w, int h, std::vector<std::uint8_t> v) { return LRMask(w, h, std::move(v)); }

LRMask swap_lr(LRMask m) {
  for (auto& v : m.storage()) v = v == 1 ? 2 : (v == 2 ? 1 : v);
  return m;
}

}  // namespace

TEST_CASE("binary f1") {
  BinaryMask a(4, 4), b(4, 4);
  CHECK(binary_f1(a, b) == 1.0);
  a.at(0, 0) = a.at(1, 0) = 1;
  CHECK(binary_f1(a, a) == 1.0);
  b.at(3, 3) = 1;
  CHECK(binary_f1(a, b) == 0.0);
  BinaryMask t(4, 4), p(4, 4);
  for (int x = 0; x < 4; ++x) t.at(x, 0) = 1;
  p.at(0, 0) = p.at(1, 0) = 1;
  CHECK(binary_f1(p, t) == doctest::Approx(2.0 / 3.0));
  CHECK(binary_f1(BinaryMask(4, 4), t) == 0.0);
  CHECK_THROWS_AS(binary_f1(BinaryMask(3, 4), t), DataError);
}

TEST_CASE("three-class confusion") {
  const LRMask truth = from_rows(4, 4, {0, 0, 1, 1,
                                         0, 0, 1, 1,
                                         2, 2, 0, 0,
                                         2, 2, 0, 0});
  const ConfusionMatrix3 id = confusion_3class(truth, truth);
  const auto n = id.normalized();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) CHECK(n[r][c] == (r == c ? 1.0 : 0.0));

  const ConfusionMatrix3 bg = confusion_3class(LRMask(4, 4), truth);
  for (int r = 0; r < 3; ++r) CHECK(bg.normalized()[r][0] == 1.0);

  const LRMask pred = from_rows(4, 4, {0, 1, 1, 2,
                                        0, 0, 1, 1,
                                        2, 1, 0, 0,
                                        0, 2, 2, 0});
  const ConfusionMatrix3 m = confusion_3class(pred, truth);
  // truth 0 (8 px): 6 -> 0, 1 -> 1, 1 -> 2.
  CHECK(m.counts[0] == std::array<std::int64_t, 3>{6, 1, 1});
  // truth 1 (4 px): 3 -> 1, 1 -> 2.
  CHECK(m.counts[1] == std::array<std::int64_t, 3>{0, 3, 1});
  // truth 2 (4 px): 1 -> 0, 1 -> 1, 2 -> 2.
  CHECK(m.counts[2] == std::array<std::int64_t, 3>{1, 1, 2});
  CHECK(m.total() == 16);
  CHECK(m.normalized()[1][1] == 0.75);
  CHECK_THROWS_AS(confusion_3class(LRMask(2, 2), truth), DataError);
}

TEST_CASE("identification accuracy and label swap complement") {
  const LRMask truth = from_rows(6, 2, {1, 1, 0, 0, 2, 2,
                                         1, 1, 0, 0, 2, 2});
  FrameResult good;
  good.lr_mask = truth;
  const std::vector<FrameResult> r{good};
  const std::vector<LRMask> t{truth};
  auto acc = identification_accuracy(r, t);
  CHECK(acc.left() == 1.0);
  CHECK(acc.right() == 1.0);
  FrameResult bad;
  bad.lr_mask = swap_lr(truth);
  const std::vector<FrameResult> rb{bad};
  acc = identification_accuracy(rb, t);
  CHECK(acc.left() == 0.0);
  CHECK(acc.right() == 0.0);
  CHECK_THROWS_AS(identification_accuracy(rb, std::vector<LRMask>{}), DataError);

  // Mixed frames: swapped accuracy is the complement.
  std::vector<FrameResult> mixed;
  std::vector<LRMask> truths;
  for (int i = 0; i < 10; ++i) {
    FrameResult f;
    f.lr_mask = i % 3 == 0 ? swap_lr(truth) : truth;
    mixed.push_back(f);
    truths.push_back(truth);
  }
  const auto a = identification_accuracy(mixed, truths);
  for (auto& f : mixed) f.lr_mask = swap_lr(f.lr_mask);
  const auto b = identification_accuracy(mixed, truths);
  CHECK(b.left() == doctest::Approx(1.0 - a.left()));
  CHECK(b.right() == doctest::Approx(1.0 - a.right()));
}

TEST_CASE("contour matching ties go to the larger truth region") {
  const LRMask truth = from_rows(6, 1, {1, 1, 1, 2, 2, 0});
  const LRMask pred = from_rows(6, 1, {0, 2, 2, 2, 2, 0});  // overlaps 2 left, 2 right
  IdentificationAccuracy acc;
  add_identification(acc, pred, truth);
  CHECK(acc.counts[0][1] == 1);  // matched to the larger (left) region, labelled right
  const LRMask nowhere = from_rows(6, 1, {0, 0, 0, 0, 0, 1});
  IdentificationAccuracy acc2;
  add_identification(acc2, nowhere, truth);
  CHECK(acc2.unmatched == 1);
}

TEST_CASE("occlusion rate") {
  std::vector<FrameResult> r(4);
  const bool truth[4] = {true, true, false, false};
  CHECK(occlusion_rate(r, truth).rate() == 0.0);
  r[0].occlusion_flag = r[1].occlusion_flag = r[2].occlusion_flag = true;
  const OcclusionStats s = occlusion_rate(r, truth);
  CHECK(s.rate() == 1.0);
  CHECK(s.false_flags == 1);
  CHECK(s.truth_occluded == 2);
}

TEST_CASE("report json shape") {
  const LRMask truth = from_rows(3, 1, {1, 0, 2});
  const std::vector<LRMask> preds{truth, truth}, truths{truth, truth};
  const bool flags[2] = {false, true};
  const VideoEval v = evaluate_video("clip", preds, truths, flags, flags);
  const std::vector<VideoEval> vs{v, v};
  const auto j = nlohmann::json::parse(report_to_json(vs));
  CHECK(j["format"] == "handseg-report");
  CHECK(j["videos"].size() == 2);
  CHECK(j["aggregate"]["frames"] == 4);
  CHECK(j["aggregate"]["binary"]["f1"] == 1.0);
  CHECK(j["aggregate"]["identification"]["left_accuracy"] == 1.0);
  CHECK(j["aggregate"]["occlusion"]["rate"] == 1.0);
  CHECK(j["videos"][0]["occluded_frames_confusion"]["counts"]["left"][1] == 1);
  CHECK(report_to_json(vs) == report_to_json(vs));
}
