#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "causaug/tensor.hpp"

namespace causaug {

/// 8-bit grayscale raster.
struct GrayImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> pixels;
};

/// Tiles every channel of every tensor left to right and min-max scales
/// each tile independently to [0, 255]. A constant tile maps to 0.
/// All tensors must share the same height. Previews only.
GrayImage make_preview(std::span<const ImageTensor> tiles);

std::vector<std::uint8_t> encode_png(const GrayImage& image);
GrayImage decode_png(std::span<const std::uint8_t> bytes);

void save_png_preview(const ImageTensor& tensor, const std::filesystem::path& path);
void save_png_preview(std::span<const ImageTensor> tiles, const std::filesystem::path& path);

}  // namespace causaug
