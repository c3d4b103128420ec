#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "causaug/npy.hpp"
#include "causaug/tensor.hpp"

namespace causaug {

/// Intensity preprocessing applied per 3-D scan.
struct PreprocSpec {
  /// Intensity window (low, high); e.g. (-275, 125) for abdominal CT.
  std::optional<std::pair<double, double>> window;
  /// Fraction of the histogram clipped at the top (0.005 = top 0.5%); 0 disables.
  double clip_top_percent = 0.005;
  bool normalize = true;
  std::size_t target_h = 192;
  std::size_t target_w = 192;

  void validate() const;
};

/// Linear-interpolated quantile (numpy's default "linear" method):
/// position q * (n - 1) in the sorted values.
double linear_quantile(std::span<const float> values, double q);

/// Steps applied to the whole scan before resizing, in order: window clamp,
/// clip above the (1 - clip_top_percent) quantile, z-normalization over all
/// voxels. Throws InvalidArgument for a zero-variance scan when normalizing.
VolumeFile normalize_intensities(const VolumeFile& volume, const PreprocSpec& spec);

/// normalize_intensities followed by a per-slice bilinear resize to the
/// target size; one 1 x H x W tensor per slice, in depth order.
std::vector<ImageTensor> preprocess(const VolumeFile& volume, const PreprocSpec& spec);

}  // namespace causaug
