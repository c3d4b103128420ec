#include "causaug/gin.hpp"

#include <cmath>

#include "causaug/kernels.hpp"

namespace causaug {

void GinConfig::validate() const {
  if (n_layers < 1) throw InvalidArgument("GinConfig: n_layers must be >= 1");
  if (n_layers > 1 && hidden_channels < 1) {
    throw InvalidArgument("GinConfig: hidden_channels must be >= 1 when n_layers > 1");
  }
  if (kernel_size % 2 == 0) {
    throw InvalidArgument("GinConfig: kernel_size " + std::to_string(kernel_size) + " is not odd");
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) {
    throw InvalidArgument("GinConfig: leaky_slope must be in [0, 1)");
  }
}

GinTransform sample_gin(const GinConfig& config, std::size_t channels, SeedStream& stream) {
  config.validate();
  if (channels < 1) throw InvalidArgument("sample_gin: channels must be >= 1");
  GinTransform t;
  t.config = config;
  t.provenance = stream.describe();
  for (std::size_t l = 0; l < config.n_layers; ++l) {
    const std::size_t in = l == 0 ? channels : config.hidden_channels;
    const std::size_t out = l + 1 == config.n_layers ? channels : config.hidden_channels;
    ConvKernel k(out, in, config.kernel_size);
    for (auto& w : k.weights) w = static_cast<float>(stream.gaussian());
    t.layers.push_back(std::move(k));
  }
  t.alpha = stream.uniform();
  return t;
}

ImageTensor apply_net(const GinTransform& transform, const ImageTensor& x) {
  if (transform.channels() != x.channels()) {
    throw InvalidArgument("apply_net: transform expects " + std::to_string(transform.channels()) +
                          " channels, image has " + std::to_string(x.channels()));
  }
  const auto slope = static_cast<float>(transform.config.leaky_slope);
  ImageTensor h = x;
  for (std::size_t l = 0; l < transform.layers.size(); ++l) {
    h = conv2d(h, transform.layers[l]);
    if (l + 1 < transform.layers.size()) {
      for (auto& v : h.data()) v = v > 0.0f ? v : slope * v;
    }
  }
  return h;
}

ImageTensor apply_gin(const GinTransform& transform, const ImageTensor& x) {
  const double x_norm = frobenius_norm(x);
  if (!(x_norm > 0.0)) throw InvalidArgument("apply_gin: input has zero Frobenius norm");
  if (!std::isfinite(x_norm)) throw InvalidArgument("apply_gin: input is not finite");
  if (transform.channels() != x.channels()) {
    throw InvalidArgument("apply_gin: transform expects " + std::to_string(transform.channels()) +
                          " channels, image has " + std::to_string(x.channels()));
  }
  const double alpha = transform.alpha;
  ImageTensor blend = x;
  if (alpha != 0.0) {
    const ImageTensor net = apply_net(transform, x);
    if (!net.all_finite()) throw DegenerateTransform("apply_gin: network output is not finite");
    for (std::size_t i = 0; i < blend.size(); ++i) {
      blend.data()[i] = static_cast<float>(alpha * net.data()[i] + (1.0 - alpha) * x.data()[i]);
    }
  }
  const double blend_norm = frobenius_norm(blend);
  if (!(blend_norm >= kDegenerateNorm) || !std::isfinite(blend_norm)) {
    throw DegenerateTransform("apply_gin: blended image norm " + std::to_string(blend_norm) +
                              " is degenerate; resample the transform");
  }
  const double scale = x_norm / blend_norm;
  for (auto& v : blend.data()) v = static_cast<float>(v * scale);
  return blend;
}

std::pair<GinTransform, GinTransform> gin_pair(const GinConfig& config, std::size_t channels,
                                               const SeedStream& stream) {
  auto s1 = stream.child("gin", 1);
  auto s2 = stream.child("gin", 2);
  return {sample_gin(config, channels, s1), sample_gin(config, channels, s2)};
}

}  // namespace causaug
