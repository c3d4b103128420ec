#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "causaug/tensor.hpp"

namespace causaug {

/// Contents of an NPY file, widened or narrowed to float32.
struct NpyArray {
  std::vector<std::size_t> shape;
  std::vector<float> data;
  /// descr as found in the header, e.g. "<f4".
  std::string descr;
};

/// 3-D scan, D x H x W.
struct VolumeFile {
  std::size_t depth = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> data;
  std::optional<std::array<double, 3>> spacing;

  std::span<const float> slice(std::size_t d) const {
    return std::span<const float>(data).subspan(d * height * width, height * width);
  }
};

/// Parse NPY bytes (format versions 1.0, 2.0 and 3.0, little-endian
/// float/int/uint dtypes, C order). Throws ParseError with the failing offset.
NpyArray parse_npy(std::span<const std::uint8_t> bytes);
NpyArray load_npy(const std::filesystem::path& path);

/// 2-D arrays load as 1 x H x W, 3-D as C x H x W.
ImageTensor to_image(const NpyArray& array);
/// 2-D arrays load as a single-slice volume.
VolumeFile to_volume(const NpyArray& array);

/// Serialize as NPY 1.0 '<f4' with the given shape (header padded to a
/// multiple of 64 bytes and terminated by '\n', matching numpy.save).
std::vector<std::uint8_t> encode_npy(std::span<const float> data, std::span<const std::size_t> shape);
std::vector<std::uint8_t> encode_npy(std::span<const std::int32_t> data, std::span<const std::size_t> shape);

/// Writes C x H x W.
void save_npy(const ImageTensor& tensor, const std::filesystem::path& path);
/// Writes H x W '<i4'.
void save_npy(const LabelMask& mask, const std::filesystem::path& path);
/// Writes D x H x W.
void save_npy(const VolumeFile& volume, const std::filesystem::path& path);

/// Whole-file helpers; failures raise IoError naming the path.
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace causaug
