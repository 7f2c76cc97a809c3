#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "handseg/grid.hpp"
#include "handseg/pool.hpp"

namespace handseg::io {

/// Mask file under `dir` whose stem matches `stem`, if any.
std::optional<std::filesystem::path> find_mask(const std::filesystem::path& dir,
                                               const std::filesystem::path& stem);

/// Nonzero pixels are hand.
BinaryMask read_binary_mask(const std::filesystem::path& path);

/// Ground-truth L/R mask for the frame named `frame_name`. Reads
/// `dir/left/<stem>` and `dir/right/<stem>` binary masks when both
/// subdirectories exist, otherwise a three-class indexed mask `dir/<stem>`.
LRMask read_lr_truth(const std::filesystem::path& dir,
                     const std::filesystem::path& frame_name);

/// Pairs every frame in `frames_dir` with the mask of the same stem in
/// `masks_dir`. Frames without a mask are skipped.
std::vector<TrainingPair> load_training_pairs(
    const std::filesystem::path& frames_dir,
    const std::filesystem::path& masks_dir);

}  // namespace handseg::io
