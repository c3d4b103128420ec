#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "causaug/error.hpp"

namespace causaug {

/// Dense C x H x W float image, row-major within each channel plane.
class ImageTensor {
 public:
  ImageTensor() = default;
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width, float fill = 0.0f);
  ImageTensor(std::size_t channels, std::size_t height, std::size_t width, std::vector<float> data);

  std::size_t channels() const noexcept { return channels_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t plane_size() const noexcept { return height_ * width_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }
  std::span<float> channel(std::size_t c) noexcept {
    return std::span<float>(data_).subspan(c * plane_size(), plane_size());
  }
  std::span<const float> channel(std::size_t c) const noexcept {
    return std::span<const float>(data_).subspan(c * plane_size(), plane_size());
  }

  float& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
    return data_[(c * height_ + y) * width_ + x];
  }
  float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
    return data_[(c * height_ + y) * width_ + x];
  }

  bool same_shape(const ImageTensor& other) const noexcept {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  bool all_finite() const noexcept;
  /// Throws InvalidArgument naming `what` if any value is NaN or infinite.
  void require_finite(const char* what) const;

  /// Copy of a single channel as a 1 x H x W tensor.
  ImageTensor extract_channel(std::size_t c) const;

  friend bool operator==(const ImageTensor&, const ImageTensor&) = default;

 private:
  std::size_t channels_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<float> data_;
};

/// Per-pixel class indices in [0, classes).
class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(std::size_t classes, std::size_t height, std::size_t width, std::int32_t fill = 0);
  LabelMask(std::size_t classes, std::size_t height, std::size_t width, std::vector<std::int32_t> data);

  std::size_t classes() const noexcept { return classes_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::span<std::int32_t> data() noexcept { return data_; }
  std::span<const std::int32_t> data() const noexcept { return data_; }
  std::int32_t& at(std::size_t y, std::size_t x) noexcept { return data_[y * width_ + x]; }
  std::int32_t at(std::size_t y, std::size_t x) const noexcept { return data_[y * width_ + x]; }

  bool aligned_with(const ImageTensor& image) const noexcept {
    return height_ == image.height() && width_ == image.width();
  }
  /// Throws InvalidArgument if any index is outside [0, classes).
  void validate() const;

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  std::size_t classes_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<std::int32_t> data_;
};

/// Convolution weights laid out [out_ch][in_ch][k][k].
struct ConvKernel {
  std::size_t out_channels = 0;
  std::size_t in_channels = 0;
  std::size_t size = 0;
  std::vector<float> weights;

  ConvKernel() = default;
  ConvKernel(std::size_t out_ch, std::size_t in_ch, std::size_t k, float fill = 0.0f)
      : out_channels(out_ch), in_channels(in_ch), size(k), weights(out_ch * in_ch * k * k, fill) {}

  float& at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) noexcept {
    return weights[((o * in_channels + i) * size + ky) * size + kx];
  }
  float at(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const noexcept {
    return weights[((o * in_channels + i) * size + ky) * size + kx];
  }

  friend bool operator==(const ConvKernel&, const ConvKernel&) = default;
};

}  // namespace causaug
