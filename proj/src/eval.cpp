#include "handseg/eval.hpp"

#include "json.hpp"
#include "handseg/error.hpp"

namespace handseg {

void BinaryCounts::add(const BinaryMask& pred, const BinaryMask& truth) {
  if (!pred.same_shape(truth)) throw DataError("mask size mismatch");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred[i] != 0, t = truth[i] != 0;
    tp += p && t;
    fp += p && !t;
    fn += !p && t;
  }
}

double BinaryCounts::f1() const {
  if (tp + fp + fn == 0) return 1.0;
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / (tp + fp);
  const double recall = static_cast<double>(tp) / (tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

double binary_f1(const BinaryMask& pred, const BinaryMask& truth) {
  BinaryCounts c;
  c.add(pred, truth);
  return c.f1();
}

void ConfusionMatrix3::add(const LRMask& pred, const LRMask& truth) {
  if (!pred.same_shape(truth)) throw DataError("mask size mismatch");
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] > 2 || truth[i] > 2) throw DataError("label outside {0, 1, 2}");
    ++counts[truth[i]][pred[i]];
  }
}

void ConfusionMatrix3::merge(const ConfusionMatrix3& other) {
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) counts[r][c] += other.counts[r][c];
}

std::int64_t ConfusionMatrix3::row_total(int row) const {
  return counts[row][0] + counts[row][1] + counts[row][2];
}

std::int64_t ConfusionMatrix3::total() const {
  return row_total(0) + row_total(1) + row_total(2);
}

std::array<std::array<double, 3>, 3> ConfusionMatrix3::normalized() const {
  std::array<std::array<double, 3>, 3> out{};
  for (int r = 0; r < 3; ++r) {
    const std::int64_t n = row_total(r);
    if (n == 0) continue;
    for (int c = 0; c < 3; ++c)
      out[r][c] = static_cast<double>(counts[r][c]) / static_cast<double>(n);
  }
  return out;
}

ConfusionMatrix3 confusion_3class(const LRMask& pred, const LRMask& truth) {
  ConfusionMatrix3 m;
  m.add(pred, truth);
  return m;
}

void IdentificationAccuracy::merge(const IdentificationAccuracy& other) {
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) counts[r][c] += other.counts[r][c];
  unmatched += other.unmatched;
}

double IdentificationAccuracy::left() const {
  const std::int64_t n = counts[0][0] + counts[0][1];
  return n == 0 ? 1.0 : static_cast<double>(counts[0][0]) / n;
}

double IdentificationAccuracy::right() const {
  const std::int64_t n = counts[1][0] + counts[1][1];
  return n == 0 ? 1.0 : static_cast<double>(counts[1][1]) / n;
}

void add_identification(IdentificationAccuracy& acc, const LRMask& pred,
                        const LRMask& truth) {
  if (!pred.same_shape(truth)) throw DataError("mask size mismatch");
  std::array<std::int64_t, 3> truth_area{};
  for (std::size_t i = 0; i < truth.size(); ++i) ++truth_area[truth[i] <= 2 ? truth[i] : 0];
  // overlap[p][t]: predicted label p (1, 2) against truth hand t (1, 2).
  std::array<std::array<std::int64_t, 3>, 3> overlap{};
  std::array<bool, 3> present{};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] == 0 || pred[i] > 2) continue;
    present[pred[i]] = true;
    if (truth[i] == 1 || truth[i] == 2) ++overlap[pred[i]][truth[i]];
  }
  for (int p = 1; p <= 2; ++p) {
    if (!present[p]) continue;
    const std::int64_t ol = overlap[p][1], or_ = overlap[p][2];
    if (ol == 0 && or_ == 0) {
      ++acc.unmatched;
      continue;
    }
    int t;
    if (ol != or_)
      t = ol > or_ ? 1 : 2;
    else
      t = truth_area[1] >= truth_area[2] ? 1 : 2;
    ++acc.counts[t - 1][p - 1];
  }
}

IdentificationAccuracy identification_accuracy(std::span<const FrameResult> results,
                                               std::span<const LRMask> truth) {
  if (results.size() != truth.size())
    throw DataError("results and truth are not aligned");
  IdentificationAccuracy acc;
  for (std::size_t i = 0; i < results.size(); ++i)
    add_identification(acc, results[i].lr_mask, truth[i]);
  return acc;
}

double OcclusionStats::rate() const {
  return truth_occluded == 0 ? 1.0
                             : static_cast<double>(detected) / truth_occluded;
}

OcclusionStats occlusion_rate(std::span<const FrameResult> results,
                              std::span<const bool> truth_flags) {
  if (results.size() != truth_flags.size())
    throw DataError("results and truth flags are not aligned");
  OcclusionStats s;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const bool f = results[i].occlusion_flag;
    s.truth_occluded += truth_flags[i];
    s.detected += truth_flags[i] && f;
    s.false_flags += !truth_flags[i] && f;
  }
  return s;
}

VideoEval evaluate_video(const std::string& name, std::span<const LRMask> pred,
                         std::span<const LRMask> truth,
                         std::span<const bool> flagged,
                         std::span<const bool> truth_flags) {
  if (pred.size() != truth.size())
    throw DataError("predictions and truth are not aligned");
  VideoEval v;
  v.name = name;
  v.frames = static_cast<std::int64_t>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    BinaryMask p(pred[i].width(), pred[i].height());
    BinaryMask t(truth[i].width(), truth[i].height());
    for (std::size_t k = 0; k < p.size(); ++k) {
      p[k] = pred[i][k] != 0;
      t[k] = truth[i][k] != 0;
    }
    v.binary.add(p, t);
    v.confusion.add(pred[i], truth[i]);
    if (i < flagged.size() && flagged[i]) v.occluded_confusion.add(pred[i], truth[i]);
    add_identification(v.identification, pred[i], truth[i]);
  }
  if (!truth_flags.empty()) {
    if (truth_flags.size() != pred.size() || flagged.size() != pred.size())
      throw DataError("occlusion flags are not aligned");
    v.has_occlusion_truth = true;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      v.occlusion.truth_occluded += truth_flags[i];
      v.occlusion.detected += truth_flags[i] && flagged[i];
      v.occlusion.false_flags += !truth_flags[i] && flagged[i];
    }
  }
  return v;
}

namespace {

nlohmann::ordered_json confusion_json(const ConfusionMatrix3& m) {
  const auto n = m.normalized();
  nlohmann::ordered_json j;
  const char* names[3] = {"no_hand", "left", "right"};
  for (int r = 0; r < 3; ++r) {
    j["normalized"][names[r]] = {n[r][0], n[r][1], n[r][2]};
    j["counts"][names[r]] = {m.counts[r][0], m.counts[r][1], m.counts[r][2]};
  }
  return j;
}

nlohmann::ordered_json video_json(const VideoEval& v) {
  nlohmann::ordered_json j;
  j["name"] = v.name;
  j["frames"] = v.frames;
  j["binary"] = {{"f1", v.binary.f1()},
                 {"tp", v.binary.tp},
                 {"fp", v.binary.fp},
                 {"fn", v.binary.fn}};
  j["confusion"] = confusion_json(v.confusion);
  j["occluded_frames_confusion"] = confusion_json(v.occluded_confusion);
  const auto& c = v.identification.counts;
  j["identification"] = {{"left_accuracy", v.identification.left()},
                         {"right_accuracy", v.identification.right()},
                         {"counts", {{"left", {c[0][0], c[0][1]}},
                                     {"right", {c[1][0], c[1][1]}}}},
                         {"unmatched", v.identification.unmatched}};
  if (v.has_occlusion_truth)
    j["occlusion"] = {{"rate", v.occlusion.rate()},
                      {"truth_occluded", v.occlusion.truth_occluded},
                      {"detected", v.occlusion.detected},
                      {"false_flags", v.occlusion.false_flags}};
  return j;
}

}  // namespace

std::string report_to_json(std::span<const VideoEval> videos) {
  VideoEval total;
  total.name = "aggregate";
  bool any_occ = false;
  for (const VideoEval& v : videos) {
    total.frames += v.frames;
    total.binary.tp += v.binary.tp;
    total.binary.fp += v.binary.fp;
    total.binary.fn += v.binary.fn;
    total.confusion.merge(v.confusion);
    total.occluded_confusion.merge(v.occluded_confusion);
    total.identification.merge(v.identification);
    if (v.has_occlusion_truth) {
      any_occ = true;
      total.occlusion.truth_occluded += v.occlusion.truth_occluded;
      total.occlusion.detected += v.occlusion.detected;
      total.occlusion.false_flags += v.occlusion.false_flags;
    }
  }
  total.has_occlusion_truth = any_occ;
  nlohmann::ordered_json j;
  j["format"] = "handseg-report";
  j["version"] = 1;
  j["videos"] = nlohmann::ordered_json::array();
  for (const VideoEval& v : videos) j["videos"].push_back(video_json(v));
  j["aggregate"] = video_json(total);
  return j.dump(2) + "\n";
}

}  // namespace handseg
