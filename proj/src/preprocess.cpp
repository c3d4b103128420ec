#include "causaug/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "causaug/kernels.hpp"

namespace causaug {

void PreprocSpec::validate() const {
  if (window && !(window->first < window->second)) {
    throw InvalidArgument("PreprocSpec: window low must be below window high");
  }
  if (!(clip_top_percent >= 0.0 && clip_top_percent < 1.0)) {
    throw InvalidArgument("PreprocSpec: clip_top_percent must be in [0, 1)");
  }
  if (target_h == 0 || target_w == 0) throw InvalidArgument("PreprocSpec: target size must be >= 1");
}

double linear_quantile(std::span<const float> values, double q) {
  if (values.empty()) throw InvalidArgument("linear_quantile: no values");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("linear_quantile: q outside [0, 1]");
  std::vector<float> v(values.begin(), values.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (frac == 0.0 || lo + 1 >= v.size()) return a;
  // Smallest element above position lo is the (lo + 1)-th order statistic.
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + frac * (b - a);
}

VolumeFile normalize_intensities(const VolumeFile& volume, const PreprocSpec& spec) {
  spec.validate();
  if (volume.depth == 0 || volume.data.empty()) throw InvalidArgument("preprocess: empty volume");
  VolumeFile out = volume;
  auto& data = out.data;

  if (spec.window) {
    const auto lo = static_cast<float>(spec.window->first);
    const auto hi = static_cast<float>(spec.window->second);
    for (auto& v : data) v = std::clamp(v, lo, hi);
  }
  if (spec.clip_top_percent > 0.0) {
    const auto threshold = static_cast<float>(linear_quantile(data, 1.0 - spec.clip_top_percent));
    for (auto& v : data) v = std::min(v, threshold);
  }
  if (spec.normalize) {
    double sum = 0.0;
    for (float v : data) sum += v;
    const double mean = sum / static_cast<double>(data.size());
    double ss = 0.0;
    for (float v : data) ss += (v - mean) * (v - mean);
    const double var = ss / static_cast<double>(data.size());
    if (!(var > 0.0)) throw InvalidArgument("preprocess: scan has zero variance and cannot be normalized");
    const double inv_std = 1.0 / std::sqrt(var);
    for (auto& v : data) v = static_cast<float>((v - mean) * inv_std);
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw InvalidArgument("preprocess: non-finite voxel after normalization");
  }
  return out;
}

std::vector<ImageTensor> preprocess(const VolumeFile& volume, const PreprocSpec& spec) {
  const VolumeFile norm = normalize_intensities(volume, spec);
  std::vector<ImageTensor> slices;
  slices.reserve(norm.depth);
  for (std::size_t d = 0; d < norm.depth; ++d) {
    const auto plane = norm.slice(d);
    ImageTensor slice(1, norm.height, norm.width, std::vector<float>(plane.begin(), plane.end()));
    slices.push_back(resize_bilinear(slice, spec.target_h, spec.target_w));
  }
  return slices;
}

}  // namespace causaug
