#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "causaug/gin.hpp"
#include "causaug/pcmap.hpp"
#include "causaug/seed_stream.hpp"
#include "causaug/tensor.hpp"

namespace causaug {

/// Two paired augmented views plus everything needed to reproduce them.
struct AugPair {
  ImageTensor t1;
  ImageTensor t2;
  PseudoCorrMap map;
  GinTransform gin1;
  GinTransform gin2;
  /// Substream the sample was drawn from.
  std::string seed_path;
  /// Number of transform draws rejected as degenerate before this one.
  std::size_t resamples = 0;
};

/// Spatially-variable blend of two GIN views of the same image:
///   t1 = g1(x) * b + g2(x) * (1 - b)
///   t2 = g1(x) * (1 - b) + g2(x) * b
/// with b broadcast over channels. Each view is renormalized by apply_gin
/// before blending, so the blend's norm is generally not ||x||.
AugPair ipa_blend(const ImageTensor& x, const GinTransform& g1, const GinTransform& g2,
                  const PseudoCorrMap& b);

/// The blend alone, on already-computed views.
void blend_views(const ImageTensor& v1, const ImageTensor& v2, const PseudoCorrMap& b, ImageTensor& t1,
                 ImageTensor& t2);

enum class MapKind { bspline, superpixel };

std::string to_string(MapKind kind);
MapKind map_kind_from_string(const std::string& name);

/// Augmentation settings used per sample.
struct AugmentConfig {
  GinConfig gin;
  MapKind map_kind = MapKind::bspline;
  BsplineLatticeConfig bspline;
  FelzConfig felz;
  /// false gives the GIN-only variant: t1 = g1(x), t2 = g2(x), map = constant 1.
  bool ipa_enabled = true;
  /// Degenerate transforms are redrawn up to this many times.
  std::size_t max_resamples = 8;
  /// Replaces both sampled alphas (the weights are still drawn). Test hook.
  std::optional<double> alpha_override;
};

/// Draws two GIN transforms from `stream / attempt:k / gin:{1,2}` and a map
/// from `stream / map:0`, then blends. Pure in (x, config, stream identity).
AugPair augment_sample(const ImageTensor& x, const AugmentConfig& config, const SeedStream& stream);

}  // namespace causaug
