#include "handseg/occlusion.hpp"

#include <cmath>
#include <limits>

#include "handseg/error.hpp"

namespace handseg {

namespace {

bool centroid_in(const BinaryMask& mask, double cx, double cy) {
  const int x = static_cast<int>(std::lround(cx));
  const int y = static_cast<int>(std::lround(cy));
  return mask.contains(x, y) && mask.at(x, y) != 0;
}

}  // namespace

bool is_occlusion(const BinaryMask& blob, const LRState& state) {
  if (!state.has_both()) return false;
  const BinaryMask& l = *state.left;
  const BinaryMask& r = *state.right;
  if (!blob.same_shape(l) || !blob.same_shape(r))
    throw DataError("occlusion check: mask size mismatch");
  std::int64_t previous = 0, overlap = 0;
  for (std::size_t i = 0; i < blob.size(); ++i) {
    const bool in_prev = l[i] || r[i];
    previous += in_prev;
    overlap += (in_prev && blob[i]) ? 1 : 0;
  }
  // 0.8 S <= I <= 1.2 S, in integers.
  return 5 * overlap >= 4 * previous && 5 * overlap <= 6 * previous;
}

SplitResult split_occlusion(const BinaryMask& blob, const LRState& state,
                            const SuperpixelSet& current, double m) {
  if (!state.has_both() || !state.superpixels) throw StaleStateError();
  const BinaryMask& l = *state.left;
  const BinaryMask& r = *state.right;
  if (!blob.same_shape(l) || !blob.same_shape(r) ||
      !blob.same_shape(current.width, current.height))
    throw DataError("occlusion split: size mismatch");

  struct Candidate {
    const Superpixel* sp;
    bool left;
  };
  std::vector<Candidate> candidates;
  for (const Superpixel& sp : state.superpixels->superpixels) {
    if (centroid_in(l, sp.cx, sp.cy))
      candidates.push_back({&sp, true});
    else if (centroid_in(r, sp.cx, sp.cy))
      candidates.push_back({&sp, false});
  }
  if (candidates.empty()) throw StaleStateError();

  SplitResult out{BinaryMask(blob.width(), blob.height()),
                  BinaryMask(blob.width(), blob.height())};
  for (const Superpixel& sp : current.superpixels) {
    std::size_t inside = 0;
    for (std::int32_t i : sp.pixels) inside += blob[static_cast<std::size_t>(i)] ? 1 : 0;
    if (2 * inside <= sp.pixels.size()) continue;

    bool to_left;
    if (centroid_in(l, sp.cx, sp.cy)) {
      to_left = true;
    } else if (centroid_in(r, sp.cx, sp.cy)) {
      to_left = false;
    } else {
      // Candidates are in id order; strict < keeps the lowest id on ties,
      // and an equal-distance left candidate wins over a right one.
      double best = std::numeric_limits<double>::infinity();
      to_left = true;
      for (const Candidate& c : candidates) {
        const double d = superpixel_distance(*c.sp, sp, m);
        if (d < best || (d == best && c.left && !to_left)) {
          best = d;
          to_left = c.left;
        }
      }
    }
    BinaryMask& dst = to_left ? out.first : out.second;
    for (std::int32_t i : sp.pixels)
      if (blob[static_cast<std::size_t>(i)]) dst[static_cast<std::size_t>(i)] = 1;
  }
  return out;
}

}  // namespace handseg
