#include "causaug/ipa.hpp"

namespace causaug {

void blend_views(const ImageTensor& v1, const ImageTensor& v2, const PseudoCorrMap& b, ImageTensor& t1,
                 ImageTensor& t2) {
  if (!v1.same_shape(v2)) throw InvalidArgument("ipa_blend: GIN views differ in shape");
  if (b.height != v1.height() || b.width != v1.width()) {
    throw InvalidArgument("ipa_blend: map is " + std::to_string(b.height) + "x" + std::to_string(b.width) +
                          ", image is " + std::to_string(v1.height()) + "x" + std::to_string(v1.width()));
  }
  t1 = ImageTensor(v1.channels(), v1.height(), v1.width());
  t2 = ImageTensor(v1.channels(), v1.height(), v1.width());
  const std::size_t plane = v1.plane_size();
  for (std::size_t c = 0; c < v1.channels(); ++c) {
    const float* a = v1.channel(c).data();
    const float* g = v2.channel(c).data();
    float* o1 = t1.channel(c).data();
    float* o2 = t2.channel(c).data();
    for (std::size_t i = 0; i < plane; ++i) {
      // Double arithmetic, single rounding: keeps each output inside the
      // interval spanned by the two views.
      const double w = b.values[i];
      o1[i] = static_cast<float>(a[i] * w + g[i] * (1.0 - w));
      o2[i] = static_cast<float>(a[i] * (1.0 - w) + g[i] * w);
    }
  }
}

AugPair ipa_blend(const ImageTensor& x, const GinTransform& g1, const GinTransform& g2,
                  const PseudoCorrMap& b) {
  AugPair out;
  const ImageTensor v1 = apply_gin(g1, x);
  const ImageTensor v2 = apply_gin(g2, x);
  blend_views(v1, v2, b, out.t1, out.t2);
  out.map = b;
  out.gin1 = g1;
  out.gin2 = g2;
  return out;
}

std::string to_string(MapKind kind) { return kind == MapKind::bspline ? "bspline" : "superpixel"; }

MapKind map_kind_from_string(const std::string& name) {
  if (name == "bspline") return MapKind::bspline;
  if (name == "superpixel") return MapKind::superpixel;
  throw InvalidArgument("unknown map kind '" + name + "' (expected bspline or superpixel)");
}

AugPair augment_sample(const ImageTensor& x, const AugmentConfig& config, const SeedStream& stream) {
  x.require_finite("augment_sample");
  for (std::size_t attempt = 0;; ++attempt) {
    auto [g1, g2] = gin_pair(config.gin, x.channels(), stream.child("attempt", attempt));
    if (config.alpha_override) g1.alpha = g2.alpha = *config.alpha_override;
    try {
      AugPair out;
      ImageTensor v1 = apply_gin(g1, x);
      ImageTensor v2 = apply_gin(g2, x);
      if (config.ipa_enabled) {
        auto map_stream = stream.child("map", 0);
        out.map = config.map_kind == MapKind::bspline
                      ? bspline_map(x.height(), x.width(), config.bspline, map_stream)
                      : superpixel_map(x, config.felz, map_stream);
        blend_views(v1, v2, out.map, out.t1, out.t2);
      } else {
        out.map = constant_map(x.height(), x.width(), 1.0);
        out.t1 = std::move(v1);
        out.t2 = std::move(v2);
      }
      out.gin1 = g1;
      out.gin2 = g2;
      out.seed_path = stream.describe();
      out.resamples = attempt;
      return out;
    } catch (const DegenerateTransform&) {
      if (attempt >= config.max_resamples) throw;
    }
  }
}

}  // namespace causaug
