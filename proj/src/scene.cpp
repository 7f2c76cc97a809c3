#include "handseg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"
#include "handseg/error.hpp"

namespace handseg {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform integer in [-amp, amp] keyed on (seed, a, b, c).
int noise(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
          std::uint64_t c, int amp) {
  if (amp <= 0) return 0;
  const std::uint64_t h = mix(mix(mix(seed ^ a) ^ b) ^ c);
  return static_cast<int>(h % static_cast<std::uint64_t>(2 * amp + 1)) - amp;
}

std::uint8_t clamp8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

struct Pose {
  double cx, cy, theta;
};

// Normalised squared radius of pixel centre (x, y) in the ellipse frame.
double radius2(const SceneHand& h, const Pose& p, int x, int y) {
  const double dx = x + 0.5 - p.cx;
  const double dy = -(y + 0.5 - p.cy);
  const double c = std::cos(p.theta), s = std::sin(p.theta);
  const double u = dx * c + dy * s;
  const double v = -dx * s + dy * c;
  return (u * u) / (h.major * h.major) + (v * v) / (h.minor * h.minor);
}

BinaryMask rasterize(const SceneHand& h, const Pose& p, int w, int hgt) {
  BinaryMask m(w, hgt);
  for (int y = 0; y < hgt; ++y)
    for (int x = 0; x < w; ++x) m.at(x, y) = radius2(h, p, x, y) <= 1.0;
  return m;
}

bool touching(const BinaryMask& a, const BinaryMask& b) {
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      if (!a.at(x, y)) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
          if (b.contains(x + dx, y + dy) && b.at(x + dx, y + dy)) return true;
    }
  return false;
}

// Horizontal offset of each hand towards the centre at frame t.
double merge_offset(const std::vector<MergeEvent>& merges, std::int64_t t) {
  double off = 0.0;
  for (const MergeEvent& m : merges) {
    const std::int64_t k = t - m.start_frame;
    if (k <= 0) continue;
    const std::int64_t a = m.approach, hold = m.hold;
    std::int64_t steps;
    if (k <= a)
      steps = k;
    else if (k <= a + hold)
      steps = a;
    else
      steps = std::max<std::int64_t>(0, 2 * a + hold - k);
    off += m.speed * static_cast<double>(steps);
  }
  return off;
}

double draw_truncated(std::mt19937_64& rng, const MaxwellParams& p, double lo,
                      double hi) {
  for (int i = 0; i < 10000; ++i) {
    const double v = sample_maxwell(rng, p);
    if (v >= lo && v <= hi) return v;
  }
  throw ParamError("pose model has no mass in the drawable range");
}

}  // namespace

void SceneParams::validate() const {
  if (width <= 0 || height <= 0) throw ParamError("scene dimensions must be positive");
  if (frames < 0) throw ParamError("frame count must be non-negative");
  for (const SceneHand* h : {&left, &right})
    if (!(h->major > 0.0) || !(h->minor > 0.0))
      throw ParamError("hand semi-axes must be positive");
  if (pose_model && pose_period < 1) throw ParamError("pose_period must be >= 1");
  for (const MergeEvent& m : merges)
    if (m.approach < 0 || m.hold < 0) throw ParamError("merge lengths must be non-negative");
}

std::vector<SceneFrame> generate_scene(const SceneParams& params) {
  params.validate();
  const int w = params.width, h = params.height;
  std::mt19937_64 rng(params.seed);

  Pose base_left{params.left.cx, params.left.cy, params.left.theta};
  Pose base_right{params.right.cx, params.right.cy, params.right.theta};
  std::int64_t pose_frame = 0;

  std::vector<SceneFrame> out;
  out.reserve(static_cast<std::size_t>(params.frames));
  for (std::int64_t t = 0; t < params.frames; ++t) {
    if (params.pose_model && t % params.pose_period == 0) {
      const LRModel& m = *params.pose_model;
      for (int attempt = 0;; ++attempt) {
        if (attempt == 1000) throw ParamError("cannot place non-touching hands");
        base_left.cx = draw_truncated(rng, m.left_x, 0.12, 0.45) * w;
        base_left.theta = draw_truncated(rng, m.left_theta, 0.35, 1.35);
        base_right.cx = (1.0 - draw_truncated(rng, m.right_x, 0.12, 0.45)) * w;
        base_right.theta =
            std::numbers::pi - draw_truncated(rng, m.right_theta, 0.35, 1.35);
        if (!touching(rasterize(params.left, base_left, w, h),
                      rasterize(params.right, base_right, w, h)))
          break;
      }
      pose_frame = t;
    }
    const double k = static_cast<double>(t - (params.pose_model ? pose_frame : 0));
    const double off = merge_offset(params.merges, t);
    const Pose pl{base_left.cx + params.left.vx * k + off,
                  base_left.cy + params.left.vy * k,
                  base_left.theta + params.left.vtheta * k};
    const Pose pr{base_right.cx + params.right.vx * k - off,
                  base_right.cy + params.right.vy * k,
                  base_right.theta + params.right.vtheta * k};

    const BinaryMask lm = rasterize(params.left, pl, w, h);
    const BinaryMask rm = rasterize(params.right, pr, w, h);
    const bool occluded = touching(lm, rm);
    if (t == 0 && occluded && params.require_separate_start)
      throw ParamError("hands overlap in the first frame");

    int dr = 0, dg = 0, db = 0;
    for (const IlluminationRegime& r : params.regimes)
      if (t >= r.start_frame) {
        dr = r.dr;
        dg = r.dg;
        db = r.db;
      }

    Frame frame(w, h, t);
    LRMask truth(w, h);
    const std::uint64_t seed = params.seed;
    for (int y = 0; y < h; ++y) {
      const double fy = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
      for (int x = 0; x < w; ++x) {
        const std::size_t i = truth.index(x, y);
        const SceneHand* hand = nullptr;
        const Pose* pose = nullptr;
        if (rm[i]) {
          hand = &params.right;
          pose = &pr;
          truth[i] = 2;
        } else if (lm[i]) {
          hand = &params.left;
          pose = &pl;
          truth[i] = 1;
        }
        double c[3];
        int amp;
        if (hand) {
          const double shade = 1.0 - params.shading * radius2(*hand, *pose, x, y);
          c[0] = hand->color.r * shade;
          c[1] = hand->color.g * shade;
          c[2] = hand->color.b * shade;
          amp = params.skin_noise;
        } else {
          const Rgb& a = params.background_top;
          const Rgb& b = params.background_bottom;
          c[0] = a.r + (b.r - a.r) * fy;
          c[1] = a.g + (b.g - a.g) * fy;
          c[2] = a.b + (b.b - a.b) * fy;
          amp = params.background_noise;
        }
        const int shift[3] = {dr, dg, db};
        std::uint8_t v[3];
        for (int ch = 0; ch < 3; ++ch) {
          const int n = noise(seed, i, ch, 0, amp) +
                        noise(seed, i, ch, static_cast<std::uint64_t>(t) + 1,
                              params.temporal_noise);
          v[ch] = clamp8(c[ch] + n + shift[ch]);
        }
        frame.set(x, y, {v[0], v[1], v[2]});
      }
    }
    out.push_back({std::move(frame), std::move(truth), occluded});
  }
  return out;
}

std::string scene_to_json(const SceneParams& p) {
  using nlohmann::ordered_json;
  auto rgb = [](const Rgb& c) { return ordered_json::array({c.r, c.g, c.b}); };
  auto hand = [&](const SceneHand& h) {
    return ordered_json{{"cx", h.cx},       {"cy", h.cy},   {"major", h.major},
                        {"minor", h.minor}, {"theta", h.theta}, {"vx", h.vx},
                        {"vy", h.vy},       {"vtheta", h.vtheta},
                        {"color", rgb(h.color)}};
  };
  ordered_json j{{"width", p.width},
                 {"height", p.height},
                 {"frames", p.frames},
                 {"seed", p.seed},
                 {"left", hand(p.left)},
                 {"right", hand(p.right)},
                 {"background_top", rgb(p.background_top)},
                 {"background_bottom", rgb(p.background_bottom)},
                 {"background_noise", p.background_noise},
                 {"skin_noise", p.skin_noise},
                 {"temporal_noise", p.temporal_noise},
                 {"shading", p.shading},
                 {"pose_period", p.pose_period},
                 {"pose_model", p.pose_model.has_value()}};
  j["regimes"] = ordered_json::array();
  for (const auto& r : p.regimes)
    j["regimes"].push_back({{"start_frame", r.start_frame}, {"shift", {r.dr, r.dg, r.db}}});
  j["merges"] = ordered_json::array();
  for (const auto& m : p.merges)
    j["merges"].push_back({{"start_frame", m.start_frame}, {"approach", m.approach},
                           {"hold", m.hold}, {"speed", m.speed}});
  return j.dump(2) + "\n";
}

}  // namespace handseg
