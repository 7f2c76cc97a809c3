#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "handseg/grid.hpp"
#include "handseg/slic.hpp"

namespace handseg {

/// What the temporal stages remember about the last processed frame.
struct LRState {
  std::optional<BinaryMask> left;
  std::optional<BinaryMask> right;
  std::optional<SuperpixelSet> superpixels;
  std::int64_t frame_index = -1;

  bool has_left() const { return left && count_nonzero(*left) > 0; }
  bool has_right() const { return right && count_nonzero(*right) > 0; }
  bool has_both() const { return has_left() && has_right(); }
};

/// True iff both previous hands exist and the blob covers between 80% and
/// 120% of their combined area.
bool is_occlusion(const BinaryMask& blob, const LRState& state);

struct SplitResult {
  BinaryMask first;   // follows the previous left hand
  BinaryMask second;  // follows the previous right hand
};

/// Splits an occluded blob using the previous hands and superpixels.
/// Current superpixels with more than half of their pixels in the blob are
/// assigned by centroid membership in the previous left/right masks, else to
/// the side of the closest previous superpixel (among those whose centroid
/// lies in either previous hand). Throws StaleStateError when no such
/// previous superpixel exists.
SplitResult split_occlusion(const BinaryMask& blob, const LRState& state,
                            const SuperpixelSet& current, double m);

}  // namespace handseg
