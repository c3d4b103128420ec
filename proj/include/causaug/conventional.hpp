#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "causaug/seed_stream.hpp"
#include "causaug/tensor.hpp"

namespace causaug {

/// Default geometric and photometric augmentations applied to every
/// training method. Each transform fires with its own probability.
/// Parameter ranges are conventional choices, not tuned values.
struct ConventionalAugConfig {
  double p_affine = 0.5;
  double rotation_deg = 15.0;  ///< uniform in [-r, r]
  double scale_min = 0.9;
  double scale_max = 1.1;
  double translate_frac = 0.05;  ///< uniform in [-f, f] of each side length

  double p_elastic = 0.3;
  double elastic_magnitude = 2.0;  ///< control displacements uniform in [-m, m] pixels
  std::optional<std::size_t> elastic_spacing;  ///< default floor(min side / 4)

  double p_brightness_contrast = 0.5;
  double contrast_min = 0.8;
  double contrast_max = 1.2;
  double brightness_range = 0.1;  ///< offset uniform in [-b, b]

  double p_gamma = 0.3;
  double gamma_min = 0.7;
  double gamma_max = 1.5;

  double p_noise = 0.3;
  double noise_sigma = 0.05;

  /// All probabilities zero.
  static ConventionalAugConfig identity();
  void validate() const;
};

/// Rotation (counter-clockwise in x-right/y-down pixel coordinates) and
/// scale about the image centre, followed by a translation in pixels.
struct AffineParams {
  double rotation_deg = 0.0;
  double scale = 1.0;
  double translate_y = 0.0;
  double translate_x = 0.0;
};

/// Inverse-mapped warp: bilinear for the image, nearest for the mask, border
/// replicated. Both receive the identical transform.
std::pair<ImageTensor, LabelMask> warp_affine(const ImageTensor& image, const LabelMask& mask,
                                              const AffineParams& params);

/// Warp by a dense displacement field: output (y, x) samples input
/// (y + dy, x + dx). Fields are H x W.
std::pair<ImageTensor, LabelMask> warp_displacement(const ImageTensor& image, const LabelMask& mask,
                                                    const std::vector<double>& dy, const std::vector<double>& dx);

/// a * x + b.
ImageTensor adjust_brightness_contrast(const ImageTensor& image, double contrast, double brightness);

/// Per channel: min-max normalize to [0, 1], raise to gamma, map back to the
/// original range. gamma == 1 and constant channels are returned unchanged.
ImageTensor adjust_gamma(const ImageTensor& image, double gamma);

/// Applies, in order and each with its probability: affine, elastic,
/// brightness/contrast, gamma, additive Gaussian noise. Every decision and
/// parameter comes from a named child of `stream`.
std::pair<ImageTensor, LabelMask> conventional_augment(const ImageTensor& image, const LabelMask& mask,
                                                       const SeedStream& stream,
                                                       const ConventionalAugConfig& config);

}  // namespace causaug
