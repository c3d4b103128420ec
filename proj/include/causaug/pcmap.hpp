#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "causaug/seed_stream.hpp"
#include "causaug/tensor.hpp"

namespace causaug {

enum class MapOrigin { bspline, superpixel, constant };

std::string to_string(MapOrigin origin);

/// H x W blending field with every value in [0, 1].
struct PseudoCorrMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<float> values;
  MapOrigin origin = MapOrigin::constant;

  float at(std::size_t y, std::size_t x) const noexcept { return values[y * width + x]; }
  /// 1 x H x W copy, for saving and previews.
  ImageTensor as_tensor() const;
};

struct BsplineLatticeConfig {
  /// Control point spacing in pixels; unset means floor(min(h, w) / 4), but never below 2.
  std::optional<std::size_t> spacing;
};

std::size_t resolve_spacing(const BsplineLatticeConfig& config, std::size_t h, std::size_t w);

/// Uniform cubic B-spline basis weights at fractional offset t in [0, 1).
/// The four weights are non-negative and sum to one.
std::array<double, 4> cubic_bspline_weights(double t) noexcept;

/// Rectangular grid of control values. Node (r, c) sits at pixel
/// ((r - kPhantom) * spacing, (c - kPhantom) * spacing): the lattice is
/// anchored at pixel (0, 0) and extended by kPhantom nodes past every border.
struct ControlLattice {
  static constexpr std::size_t kPhantom = 3;

  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t spacing = 0;
  std::vector<double> values;

  /// Lattice large enough to cover an h x w image.
  static ControlLattice covering(std::size_t h, std::size_t w, std::size_t spacing);

  double& at(std::size_t r, std::size_t c) noexcept { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const noexcept { return values[r * cols + c]; }
};

/// Dense h x w field interpolated from the lattice with separable cubic
/// B-spline weights. Pixel (y, x) uses nodes floor(y/s)+2 .. +5 by
/// floor(x/s)+2 .. +5 (indices include the phantom offset).
std::vector<double> evaluate_lattice(const ControlLattice& lattice, std::size_t h, std::size_t w);

/// Smooth random map: U(0,1) control values interpolated with cubic B-splines.
PseudoCorrMap bspline_map(std::size_t h, std::size_t w, const BsplineLatticeConfig& config,
                          SeedStream& stream);

/// Map from explicit control values (each must lie in [0, 1]).
PseudoCorrMap bspline_map(std::size_t h, std::size_t w, const ControlLattice& lattice);

struct FelzConfig {
  /// Scale parameter on intensities rescaled to [0, 255]; larger gives bigger segments.
  double k = 100.0;
  std::size_t min_size = 50;
  /// Gaussian pre-smoothing; 0 disables it.
  double sigma = 0.8;
};

struct Segmentation {
  std::size_t height = 0;
  std::size_t width = 0;
  /// Segment ids numbered 0.. in raster order of first appearance.
  std::vector<std::int32_t> labels;
  std::size_t count = 0;
};

/// Felzenszwalb-Huttenlocher graph segmentation on a 4-connected grid.
///
/// The image is min-max rescaled to [0, 255] over all channels and smoothed
/// with `sigma`. Edge weights are Euclidean distances across channels;
/// edges are processed by increasing (weight, edge id) where the edge id of
/// the right neighbour of pixel p is 2p and of the lower neighbour 2p + 1.
/// Components merge when the edge weight is <= both Int(C) + k / |C|;
/// then components smaller than min_size are merged along the same order.
Segmentation felzenszwalb(const ImageTensor& image, const FelzConfig& config);

/// The graph stage alone, on an already-prepared single-channel intensity
/// image (no rescale, no smoothing).
Segmentation felzenszwalb_graph(const ImageTensor& prepared, double k, std::size_t min_size);

/// Superpixel map: each Felzenszwalb segment gets an independent U(0,1) value,
/// drawn in segment-id order.
PseudoCorrMap superpixel_map(const ImageTensor& image, const FelzConfig& config, SeedStream& stream);

PseudoCorrMap constant_map(std::size_t h, std::size_t w, double value);

}  // namespace causaug
