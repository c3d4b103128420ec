#include "causaug/segmenter.hpp"

#include <algorithm>
#include <cmath>

#include "causaug/error.hpp"
#include "causaug/kernels.hpp"

namespace causaug {

void SegmenterConfig::validate() const {
  if (in_channels == 0 || classes < 2) throw InvalidArgument("SegmenterConfig: need >= 1 input channel and >= 2 classes");
  for (const auto& l : hidden) {
    if (l.out_channels == 0) throw InvalidArgument("SegmenterConfig: hidden layer with zero channels");
    if (l.kernel_size % 2 == 0) throw InvalidArgument("SegmenterConfig: kernel size must be odd");
    if (l.dilation == 0) throw InvalidArgument("SegmenterConfig: dilation must be >= 1");
  }
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) throw InvalidArgument("SegmenterConfig: leaky_slope outside [0, 1)");
}

namespace {

template <typename T>
std::vector<T> pad_planes(const std::vector<T>& x, std::size_t channels, std::size_t h, std::size_t w,
                          std::size_t pad) {
  const std::size_t ph = h + 2 * pad;
  const std::size_t pw = w + 2 * pad;
  if (pad >= h || pad >= w) throw InvalidArgument("TinySegmenter: image too small for the receptive field");
  std::vector<T> out(channels * ph * pw);
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = x.data() + c * h * w;
    T* dst = out.data() + c * ph * pw;
    for (std::size_t y = 0; y < ph; ++y) {
      const auto sy = static_cast<std::size_t>(
          reflect_index(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(pad), static_cast<std::ptrdiff_t>(h)));
      for (std::size_t x0 = 0; x0 < pw; ++x0) {
        const auto sx = static_cast<std::size_t>(reflect_index(
            static_cast<std::ptrdiff_t>(x0) - static_cast<std::ptrdiff_t>(pad), static_cast<std::ptrdiff_t>(w)));
        dst[y * pw + x0] = src[sy * w + sx];
      }
    }
  }
  return out;
}

// Adjoint of pad_planes: every padded pixel's gradient goes back to its source.
template <typename T>
std::vector<T> fold_padding(const std::vector<T>& padded, std::size_t channels, std::size_t h, std::size_t w,
                            std::size_t pad) {
  const std::size_t ph = h + 2 * pad;
  const std::size_t pw = w + 2 * pad;
  std::vector<T> out(channels * h * w, T(0));
  for (std::size_t c = 0; c < channels; ++c) {
    const T* src = padded.data() + c * ph * pw;
    T* dst = out.data() + c * h * w;
    for (std::size_t y = 0; y < ph; ++y) {
      const auto sy = static_cast<std::size_t>(
          reflect_index(static_cast<std::ptrdiff_t>(y) - static_cast<std::ptrdiff_t>(pad), static_cast<std::ptrdiff_t>(h)));
      for (std::size_t x0 = 0; x0 < pw; ++x0) {
        const auto sx = static_cast<std::size_t>(reflect_index(
            static_cast<std::ptrdiff_t>(x0) - static_cast<std::ptrdiff_t>(pad), static_cast<std::ptrdiff_t>(w)));
        dst[sy * w + sx] += src[y * pw + x0];
      }
    }
  }
  return out;
}

}  // namespace

template <typename T>
TinySegmenter<T>::TinySegmenter(const SegmenterConfig& config, SeedStream& stream) : config_(config) {
  config_.validate();
  std::size_t in = config_.in_channels;
  auto add = [&](std::size_t out, std::size_t k, std::size_t dilation) {
    SegmenterLayer<T> l{in, out, k, dilation, std::vector<T>(out * in * k * k), std::vector<T>(out)};
    const double bound = 1.0 / std::sqrt(static_cast<double>(in * k * k));
    for (auto& v : l.weight) v = static_cast<T>(stream.uniform(-bound, bound));
    for (auto& v : l.bias) v = static_cast<T>(stream.uniform(-bound, bound));
    layers_.push_back(std::move(l));
    in = out;
  };
  for (const auto& spec : config_.hidden) add(spec.out_channels, spec.kernel_size, spec.dilation);
  add(config_.classes, 1, 1);
}

template <typename T>
std::vector<T> TinySegmenter<T>::forward(const std::vector<T>& input, std::size_t h, std::size_t w,
                                         Cache* cache) const {
  const std::size_t n = h * w;
  if (layers_.empty()) throw InvalidArgument("TinySegmenter: model has no layers");
  if (input.size() != config_.in_channels * n) throw InvalidArgument("TinySegmenter: input size mismatch");
  if (cache) *cache = Cache{h, w, {}, {}};
  const T slope = static_cast<T>(config_.leaky_slope);

  std::vector<T> x = input;
  for (std::size_t li = 0; li < layers_.size(); ++li) {
    const auto& l = layers_[li];
    const std::size_t pad = l.pad();
    const std::size_t pw = w + 2 * pad;
    const std::size_t ph = h + 2 * pad;
    std::vector<T> padded = pad_planes(x, l.in_channels, h, w, pad);
    std::vector<T> out(l.out_channels * n);
    for (std::size_t o = 0; o < l.out_channels; ++o) {
      T* dst_plane = out.data() + o * n;
      for (std::size_t p = 0; p < n; ++p) dst_plane[p] = l.bias[o];
      for (std::size_t i = 0; i < l.in_channels; ++i) {
        const T* src_plane = padded.data() + i * ph * pw;
        for (std::size_t ky = 0; ky < l.kernel_size; ++ky) {
          for (std::size_t kx = 0; kx < l.kernel_size; ++kx) {
            const T wv = l.weight[((o * l.in_channels + i) * l.kernel_size + ky) * l.kernel_size + kx];
            const std::size_t off = ky * l.dilation * pw + kx * l.dilation;
            for (std::size_t y = 0; y < h; ++y) {
              const T* src = src_plane + y * pw + off;
              T* dst = dst_plane + y * w;
              for (std::size_t x0 = 0; x0 < w; ++x0) dst[x0] += wv * src[x0];
            }
          }
        }
      }
    }
    const bool hidden = li + 1 < layers_.size();
    if (cache) {
      cache->padded_inputs.push_back(std::move(padded));
      if (hidden) cache->pre_activations.push_back(out);
    }
    if (hidden) {
      for (auto& v : out) v = v > T(0) ? v : slope * v;
    }
    x = std::move(out);
  }
  return x;
}

template <typename T>
typename TinySegmenter<T>::Gradients TinySegmenter<T>::backward(const Cache& cache,
                                                                const std::vector<T>& grad_logits) const {
  const std::size_t h = cache.height;
  const std::size_t w = cache.width;
  const std::size_t n = h * w;
  if (cache.padded_inputs.size() != layers_.size()) throw InvalidArgument("TinySegmenter: cache from another model");
  if (grad_logits.size() != config_.classes * n) throw InvalidArgument("TinySegmenter: gradient size mismatch");
  const T slope = static_cast<T>(config_.leaky_slope);

  Gradients grads = zero_gradients();
  std::vector<T> g = grad_logits;
  std::vector<T> acc(w);
  for (std::size_t li = layers_.size(); li-- > 0;) {
    const auto& l = layers_[li];
    auto& gl = grads[li];
    if (li + 1 < layers_.size()) {
      const auto& pre = cache.pre_activations[li];
      for (std::size_t p = 0; p < g.size(); ++p) g[p] = pre[p] > T(0) ? g[p] : slope * g[p];
    }
    const std::size_t pad = l.pad();
    const std::size_t pw = w + 2 * pad;
    const std::size_t ph = h + 2 * pad;
    const auto& padded = cache.padded_inputs[li];
    std::vector<T> dpadded(l.in_channels * ph * pw, T(0));
    for (std::size_t o = 0; o < l.out_channels; ++o) {
      const T* g_plane = g.data() + o * n;
      T bsum(0);
      for (std::size_t p = 0; p < n; ++p) bsum += g_plane[p];
      gl.bias[o] = bsum;
      for (std::size_t i = 0; i < l.in_channels; ++i) {
        const T* src_plane = padded.data() + i * ph * pw;
        T* dsrc_plane = dpadded.data() + i * ph * pw;
        for (std::size_t ky = 0; ky < l.kernel_size; ++ky) {
          for (std::size_t kx = 0; kx < l.kernel_size; ++kx) {
            const std::size_t widx = ((o * l.in_channels + i) * l.kernel_size + ky) * l.kernel_size + kx;
            const T wv = l.weight[widx];
            const std::size_t off = ky * l.dilation * pw + kx * l.dilation;
            std::fill(acc.begin(), acc.end(), T(0));
            for (std::size_t y = 0; y < h; ++y) {
              const T* src = src_plane + y * pw + off;
              T* dsrc = dsrc_plane + y * pw + off;
              const T* gr = g_plane + y * w;
              for (std::size_t x0 = 0; x0 < w; ++x0) {
                acc[x0] += gr[x0] * src[x0];
                dsrc[x0] += wv * gr[x0];
              }
            }
            T sum(0);
            for (std::size_t x0 = 0; x0 < w; ++x0) sum += acc[x0];
            gl.weight[widx] = sum;
          }
        }
      }
    }
    if (li > 0) g = fold_padding(dpadded, l.in_channels, h, w, pad);
  }
  return grads;
}

template <typename T>
typename TinySegmenter<T>::Gradients TinySegmenter<T>::zero_gradients() const {
  Gradients g = layers_;
  for (auto& l : g) {
    std::fill(l.weight.begin(), l.weight.end(), T(0));
    std::fill(l.bias.begin(), l.bias.end(), T(0));
  }
  return g;
}

template <typename T>
void TinySegmenter<T>::accumulate(Gradients& into, const Gradients& g) {
  if (into.size() != g.size()) throw InvalidArgument("TinySegmenter: gradient shape mismatch");
  for (std::size_t l = 0; l < g.size(); ++l) {
    for (std::size_t k = 0; k < g[l].weight.size(); ++k) into[l].weight[k] += g[l].weight[k];
    for (std::size_t k = 0; k < g[l].bias.size(); ++k) into[l].bias[k] += g[l].bias[k];
  }
}

template <typename T>
void TinySegmenter<T>::sgd_step(const Gradients& g, double lr) {
  if (g.size() != layers_.size()) throw InvalidArgument("TinySegmenter: gradient shape mismatch");
  const T step = static_cast<T>(lr);
  for (std::size_t l = 0; l < g.size(); ++l) {
    for (std::size_t k = 0; k < g[l].weight.size(); ++k) layers_[l].weight[k] -= step * g[l].weight[k];
    for (std::size_t k = 0; k < g[l].bias.size(); ++k) layers_[l].bias[k] -= step * g[l].bias[k];
  }
}

template <typename T>
std::vector<T> TinySegmenter<T>::flatten(const Gradients& g) {
  std::vector<T> out;
  for (const auto& l : g) {
    out.insert(out.end(), l.weight.begin(), l.weight.end());
    out.insert(out.end(), l.bias.begin(), l.bias.end());
  }
  return out;
}

template <typename T>
std::vector<T> TinySegmenter<T>::flat_parameters() const {
  return flatten(layers_);
}

template <typename T>
void TinySegmenter<T>::set_flat_parameters(const std::vector<T>& values) {
  std::size_t k = 0;
  for (auto& l : layers_) {
    for (auto& v : l.weight) {
      if (k >= values.size()) throw InvalidArgument("TinySegmenter: too few parameter values");
      v = values[k++];
    }
    for (auto& v : l.bias) {
      if (k >= values.size()) throw InvalidArgument("TinySegmenter: too few parameter values");
      v = values[k++];
    }
  }
  if (k != values.size()) throw InvalidArgument("TinySegmenter: too many parameter values");
}

template class TinySegmenter<float>;
template class TinySegmenter<double>;

}  // namespace causaug
