#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "causaug/seed_stream.hpp"
#include "causaug/tensor.hpp"

namespace causaug {

/// Shape of the random shallow networks used for global intensity augmentation.
struct GinConfig {
  std::size_t n_layers = 4;
  std::size_t hidden_channels = 2;
  std::size_t kernel_size = 3;
  double leaky_slope = 0.2;

  /// Throws InvalidArgument when n_layers == 0, kernel_size is even, or
  /// leaky_slope is outside [0, 1).
  void validate() const;

  /// Single random linear filter (random-convolution baseline).
  static GinConfig randconv(std::size_t kernel_size = 3) { return {1, 0, kernel_size, 0.0}; }

  friend bool operator==(const GinConfig&, const GinConfig&) = default;
};

/// One sampled appearance transform: bias-free conv layers with N(0,1)
/// weights and the interpolation coefficient alpha.
struct GinTransform {
  GinConfig config;
  std::vector<ConvKernel> layers;
  double alpha = 0.0;
  /// Substream the transform was drawn from.
  std::string provenance;

  std::size_t channels() const noexcept { return layers.empty() ? 0 : layers.front().in_channels; }
};

/// Layer l maps (l == 0 ? channels : hidden) -> (l == last ? channels : hidden).
/// Weights are drawn layer by layer in [out][in][ky][kx] order, then alpha ~ U(0,1).
GinTransform sample_gin(const GinConfig& config, std::size_t channels, SeedStream& stream);

/// The bare network: conv, LeakyReLU, conv, ..., conv (no activation after
/// the last layer, no bias, spatial size preserved).
ImageTensor apply_net(const GinTransform& transform, const ImageTensor& x);

/// Blends alpha * net(x) + (1 - alpha) * x and rescales the result to the
/// Frobenius norm of x.
///
/// Throws InvalidArgument when x has zero norm or a channel mismatch, and
/// DegenerateTransform when the blend's norm is below kDegenerateNorm or the
/// network output is not finite (resample the transform in that case).
ImageTensor apply_gin(const GinTransform& transform, const ImageTensor& x);

inline constexpr double kDegenerateNorm = 1e-8;

/// Two independent transforms from the substreams ("gin", 1) and ("gin", 2).
std::pair<GinTransform, GinTransform> gin_pair(const GinConfig& config, std::size_t channels,
                                               const SeedStream& stream);

}  // namespace causaug
