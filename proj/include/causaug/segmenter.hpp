#pragma once

#include <cstddef>
#include <vector>

#include "causaug/seed_stream.hpp"

namespace causaug {

struct SegmenterLayerSpec {
  std::size_t out_channels = 8;
  std::size_t kernel_size = 3;
  std::size_t dilation = 1;

  friend bool operator==(const SegmenterLayerSpec&, const SegmenterLayerSpec&) = default;
};

/// Hidden conv layers (each followed by LeakyReLU) and a final 1x1 conv to
/// `classes` logits. Every conv has a bias and reflect padding, so logits are
/// spatially aligned with the input.
struct SegmenterConfig {
  std::size_t in_channels = 1;
  std::size_t classes = 2;
  std::vector<SegmenterLayerSpec> hidden = {{8, 5, 1}, {8, 5, 2}};
  double leaky_slope = 0.2;

  void validate() const;
  friend bool operator==(const SegmenterConfig&, const SegmenterConfig&) = default;
};

template <typename T>
struct SegmenterLayer {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel_size = 1;
  std::size_t dilation = 1;
  std::vector<T> weight;  ///< [out][in][ky][kx]
  std::vector<T> bias;    ///< [out]

  std::size_t pad() const noexcept { return dilation * (kernel_size / 2); }
  friend bool operator==(const SegmenterLayer&, const SegmenterLayer&) = default;
};

/// Small fully-convolutional classifier with hand-derived gradients.
/// Float for training; double for gradient checks.
template <typename T>
class TinySegmenter {
 public:
  /// Per-layer parameter gradients, same layout as the layers.
  using Gradients = std::vector<SegmenterLayer<T>>;

  /// Activations kept by forward() for backward().
  struct Cache {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<std::vector<T>> padded_inputs;  ///< per layer, reflect padded
    std::vector<std::vector<T>> pre_activations;  ///< per hidden layer
  };

  TinySegmenter() = default;
  /// Weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  TinySegmenter(const SegmenterConfig& config, SeedStream& stream);

  const SegmenterConfig& config() const noexcept { return config_; }
  const std::vector<SegmenterLayer<T>>& layers() const noexcept { return layers_; }
  std::vector<SegmenterLayer<T>>& layers() noexcept { return layers_; }

  /// input is in_channels x h x w; returns classes x h x w logits.
  std::vector<T> forward(const std::vector<T>& input, std::size_t h, std::size_t w, Cache* cache = nullptr) const;

  /// Parameter gradients given dL/dlogits for the forward pass in `cache`.
  Gradients backward(const Cache& cache, const std::vector<T>& grad_logits) const;

  /// Zero-valued gradients with this model's shapes.
  Gradients zero_gradients() const;
  static void accumulate(Gradients& into, const Gradients& g);

  /// p <- p - lr * g.
  void sgd_step(const Gradients& g, double lr);

  /// All parameters in layer order, weights before biases.
  std::vector<T> flat_parameters() const;
  static std::vector<T> flatten(const Gradients& g);
  void set_flat_parameters(const std::vector<T>& values);

  template <typename U>
  TinySegmenter<U> cast() const {
    TinySegmenter<U> out;
    out.config_ = config_;
    for (const auto& l : layers_) {
      SegmenterLayer<U> c{l.in_channels, l.out_channels, l.kernel_size, l.dilation, {}, {}};
      c.weight.assign(l.weight.begin(), l.weight.end());
      c.bias.assign(l.bias.begin(), l.bias.end());
      out.layers_.push_back(std::move(c));
    }
    return out;
  }

  friend bool operator==(const TinySegmenter&, const TinySegmenter&) = default;

 private:
  template <typename U>
  friend class TinySegmenter;

  SegmenterConfig config_;
  std::vector<SegmenterLayer<T>> layers_;
};

extern template class TinySegmenter<float>;
extern template class TinySegmenter<double>;

}  // namespace causaug
