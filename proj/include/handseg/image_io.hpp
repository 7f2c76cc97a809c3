#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "handseg/grid.hpp"
#include "handseg/imaging.hpp"

namespace handseg::io {

struct RawTag {};
/// Single-channel 8-bit image as stored on disk: palette indexes for
/// indexed PNGs, intensities otherwise.
using LabelImage = Grid<std::uint8_t, RawTag>;

/// Reads an 8-bit RGB frame from a PNG or JPEG file.
Frame read_frame(const std::filesystem::path& path);
void write_frame_png(const std::filesystem::path& path, const Frame& frame);

LabelImage read_label_image(const std::filesystem::path& path);

/// Writes `values` as an 8-bit indexed PNG with the given RGB palette.
void write_indexed_png(const std::filesystem::path& path, int width,
                       int height, std::span<const std::uint8_t> values,
                       std::span<const Rgb> palette);

/// LRMask output: palette {0: black, 1: red (left), 2: blue (right)}.
void write_lr_mask(const std::filesystem::path& path, const LRMask& mask);

void write_gray16_png(const std::filesystem::path& path, int width,
                      int height, std::span<const std::uint16_t> values);

/// Image files (.png, .jpg, .jpeg) directly under `dir`, in lexicographic
/// filename order.
std::vector<std::filesystem::path> list_images(
    const std::filesystem::path& dir);

}  // namespace handseg::io
