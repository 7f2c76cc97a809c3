#include "handseg/pipeline.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "handseg/error.hpp"

namespace handseg {

namespace {

struct Candidate {
  Contour contour;
  EllipseFeatures features;
};

// Features for a segment; nullopt when no ellipse can be fitted.
std::optional<EllipseFeatures> features_of(const Contour& c, int w, int h) {
  try {
    return extract_features(fit_ellipse(c), w, h);
  } catch (const DataError&) {
    return std::nullopt;
  }
}

// A split part as one segment: its pixels, traced by its largest piece.
std::optional<Candidate> part_candidate(const BinaryMask& part) {
  std::vector<Contour> pieces = extract_contours(part);
  if (pieces.empty()) return std::nullopt;
  std::size_t big = 0;
  for (std::size_t i = 1; i < pieces.size(); ++i)
    if (pieces[i].area > pieces[big].area) big = i;
  Contour c;
  c.boundary = std::move(pieces[big].boundary);
  for (std::size_t i = 0; i < part.size(); ++i)
    if (part[i]) c.region.push_back(static_cast<std::int32_t>(i));
  c.area = static_cast<std::int64_t>(c.region.size());
  auto f = features_of(c, part.width(), part.height());
  if (!f) return std::nullopt;
  return Candidate{std::move(c), *f};
}

std::vector<Assignment> identify(const std::vector<Candidate>& cands,
                                 const LRModel& model) {
  std::vector<EllipseFeatures> feats;
  for (const Candidate& c : cands) feats.push_back(c.features);
  return assign_ids(feats, model);
}

}  // namespace

void PipelineConfig::validate() const {
  if (segment.k < 1) throw ParamError("k must be >= 1");
  if (!(segment.lambda > 0.0 && segment.lambda < 1.0))
    throw ParamError("lambda must be in (0, 1)");
  if (!(segment.threshold > 0.0 && segment.threshold < 1.0))
    throw ParamError("threshold must be in (0, 1)");
  superpixels.validate();
  if (working_width < 0) throw ParamError("working_width must be >= 0");
  if (sample_stride < 1) throw ParamError("stride must be >= 1");
  if (postprocess.min_area_factor < 0 || postprocess.margin_factor < 0)
    throw ParamError("post-processing factors must be >= 0");
}

PipelineConfig config_from_json(const std::string& text, PipelineConfig c) {
  try {
    const auto j = nlohmann::json::parse(text);
    c.pool_path = j.value("pool_path", c.pool_path);
    c.lr_model_path = j.value("lr_model_path", c.lr_model_path);
    c.segment.k = j.value("k_fuse", c.segment.k);
    c.segment.lambda = j.value("lambda", c.segment.lambda);
    c.segment.threshold = j.value("threshold", c.segment.threshold);
    if (j.contains("superpixels")) {
      const auto& s = j["superpixels"];
      c.superpixels.target_count = s.value("target_count", c.superpixels.target_count);
      c.superpixels.m = s.value("m", c.superpixels.m);
      c.superpixels.iterations = s.value("iterations", c.superpixels.iterations);
    }
    if (j.contains("postprocess")) {
      const auto& p = j["postprocess"];
      c.postprocess.min_area_factor =
          p.value("min_area_factor", c.postprocess.min_area_factor);
      c.postprocess.margin_factor = p.value("margin_factor", c.postprocess.margin_factor);
      if (p.contains("area_rule")) {
        const std::string rule = p["area_rule"].get<std::string>();
        if (rule == "squared_width_fraction")
          c.postprocess.area_rule = AreaRule::kSquaredWidthFraction;
        else if (rule == "fraction_of_width_squared")
          c.postprocess.area_rule = AreaRule::kFractionOfWidthSquared;
        else
          throw ParamError("unknown area_rule: " + rule);
      }
    }
    c.working_width = j.value("working_width", c.working_width);
    c.sample_stride = j.value("sample_stride", c.sample_stride);
    c.enable_split = j.value("enable_split", c.enable_split);
  } catch (const nlohmann::json::exception& e) {
    throw ParamError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

std::string config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["pool_path"] = c.pool_path;
  j["lr_model_path"] = c.lr_model_path;
  j["k_fuse"] = c.segment.k;
  j["lambda"] = c.segment.lambda;
  j["threshold"] = c.segment.threshold;
  j["superpixels"] = {{"target_count", c.superpixels.target_count},
                      {"m", c.superpixels.m},
                      {"iterations", c.superpixels.iterations}};
  j["postprocess"] = {
      {"min_area_factor", c.postprocess.min_area_factor},
      {"margin_factor", c.postprocess.margin_factor},
      {"area_rule", c.postprocess.area_rule == AreaRule::kSquaredWidthFraction
                        ? "squared_width_fraction"
                        : "fraction_of_width_squared"}};
  j["working_width"] = c.working_width;
  j["sample_stride"] = c.sample_stride;
  j["enable_split"] = c.enable_split;
  return j.dump(2) + "\n";
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::pair<FrameResult, LRState> process_mask(const LRState& state,
                                             const Frame& frame,
                                             const LabImage& lab,
                                             const BinaryMask& hands,
                                             const PipelineConfig& config,
                                             const LRModel& model) {
  const int w = frame.width(), h = frame.height();
  if (!hands.same_shape(w, h)) throw DataError("hand mask does not match frame");

  FrameResult result;
  result.frame_index = frame.index();
  std::vector<Contour> contours =
      filter_contours(extract_contours(hands), w, h, config.postprocess);

  std::optional<SuperpixelSet> current_sp;
  std::vector<Candidate> parts;
  if (!contours.empty()) {
    const BinaryMask blob = region_mask(contours.front(), w, h);
    if (is_occlusion(blob, state)) {
      result.occlusion_flag = true;
      if (config.enable_split) {
        current_sp = compute_superpixels(lab, config.superpixels);
        try {
          const SplitResult split =
              split_occlusion(blob, state, *current_sp, config.superpixels.m);
          for (const BinaryMask* m : {&split.first, &split.second})
            if (auto c = part_candidate(*m)) parts.push_back(std::move(*c));
          result.split_applied = true;
          contours.erase(contours.begin());
        } catch (const StaleStateError&) {
          std::clog << "warning: frame " << frame.index()
                    << ": stale occlusion state, identifying without split\n";
          parts.clear();
        }
      }
    }
  }

  std::vector<Candidate> rest;
  for (Contour& c : contours)
    if (auto f = features_of(c, w, h)) rest.push_back({std::move(c), *f});

  std::vector<std::pair<const Candidate*, Assignment>> chosen;
  bool left_taken = false, right_taken = false;
  const auto take = [&](const std::vector<Candidate>& from,
                        const std::vector<Assignment>& ids) {
    for (const Assignment& a : ids) {
      bool& taken = a.label == HandLabel::kLeft ? left_taken : right_taken;
      if (taken) continue;
      taken = true;
      chosen.emplace_back(&from[a.index], a);
    }
  };
  // Split parts are labelled first; the remaining blobs only compete for a
  // label the parts left free.
  if (!parts.empty()) take(parts, identify(parts, model));
  if (!(left_taken && right_taken) && !rest.empty()) take(rest, identify(rest, model));

  LRMask working(w, h);
  for (const auto& [cand, a] : chosen) {
    const auto v = static_cast<std::uint8_t>(a.label);
    for (std::int32_t i : cand->contour.region) {
      auto& px = working[static_cast<std::size_t>(i)];
      if (px == 0) px = v;
    }
    result.segments.push_back({cand->contour, a.label, cand->features, a.ratio});
  }

  LRState next;
  next.frame_index = frame.index();
  if (left_taken) next.left = class_mask(working, PixelClass::kLeft);
  if (right_taken) next.right = class_mask(working, PixelClass::kRight);
  if (next.has_both()) {
    next.superpixels = current_sp ? std::move(*current_sp)
                                  : compute_superpixels(lab, config.superpixels);
  }
  result.lr_mask = std::move(working);
  return {std::move(result), std::move(next)};
}

std::pair<FrameResult, LRState> process_frame(const LRState& state,
                                              const Frame& frame,
                                              const PipelineConfig& config,
                                              const ModelPool& pool,
                                              const LRModel& model) {
  const Frame work = config.working_width > 0 && config.working_width != frame.width()
                         ? resample(frame, config.working_width)
                         : frame;
  const LabImage lab = to_lab(work);
  const BinaryMask hands = segment(pool, work, lab, config.segment);
  auto out = process_mask(state, work, lab, hands, config, model);
  out.first.lr_mask = resample_nearest(out.first.lr_mask, frame.width(), frame.height());
  return out;
}

VideoProcessor::VideoProcessor(const PipelineConfig& config, const ModelPool& pool,
                               const LRModel& model)
    : config_(config), pool_(pool), model_(model) {
  config_.validate();
  model_.validate();
}

FrameResult VideoProcessor::process(const Frame& frame) {
  if (!dims_) {
    dims_ = {frame.width(), frame.height()};
  } else if (dims_->first != frame.width() || dims_->second != frame.height()) {
    throw DataError("frame " + std::to_string(frame.index()) +
                    " has inconsistent dimensions");
  }
  auto [result, next] = process_frame(state_, frame, config_, pool_, model_);
  state_ = std::move(next);
  return std::move(result);
}

std::vector<FrameResult> process_video(std::span<const Frame> frames,
                                       const PipelineConfig& config,
                                       const ModelPool& pool,
                                       const LRModel& model) {
  if (frames.empty()) throw DataError("empty frame sequence");
  VideoProcessor vp(config, pool, model);
  std::vector<FrameResult> out;
  for (std::size_t i = 0; i < frames.size();
       i += static_cast<std::size_t>(config.sample_stride))
    out.push_back(vp.process(frames[i]));
  return out;
}

}  // namespace handseg
