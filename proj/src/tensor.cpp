#include "causaug/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace causaug {

ImageTensor::ImageTensor(std::size_t channels, std::size_t height, std::size_t width, float fill)
    : channels_(channels), height_(height), width_(width), data_(channels * height * width, fill) {}

ImageTensor::ImageTensor(std::size_t channels, std::size_t height, std::size_t width,
                         std::vector<float> data)
    : channels_(channels), height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != channels * height * width) {
    throw InvalidArgument("ImageTensor: data length " + std::to_string(data_.size()) +
                          " does not match " + std::to_string(channels) + "x" +
                          std::to_string(height) + "x" + std::to_string(width));
  }
}

bool ImageTensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

void ImageTensor::require_finite(const char* what) const {
  if (!all_finite()) throw InvalidArgument(std::string(what) + ": tensor contains NaN or Inf");
}

ImageTensor ImageTensor::extract_channel(std::size_t c) const {
  auto plane = channel(c);
  return ImageTensor(1, height_, width_, std::vector<float>(plane.begin(), plane.end()));
}

LabelMask::LabelMask(std::size_t classes, std::size_t height, std::size_t width, std::int32_t fill)
    : classes_(classes), height_(height), width_(width), data_(height * width, fill) {}

LabelMask::LabelMask(std::size_t classes, std::size_t height, std::size_t width,
                     std::vector<std::int32_t> data)
    : classes_(classes), height_(height), width_(width), data_(std::move(data)) {
  if (data_.size() != height * width) {
    throw InvalidArgument("LabelMask: data length does not match " + std::to_string(height) + "x" +
                          std::to_string(width));
  }
}

void LabelMask::validate() const {
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (data_[i] < 0 || static_cast<std::size_t>(data_[i]) >= classes_) {
      throw InvalidArgument("LabelMask: class index " + std::to_string(data_[i]) + " at pixel " +
                            std::to_string(i) + " outside [0, " + std::to_string(classes_) + ")");
    }
  }
}

}  // namespace causaug
