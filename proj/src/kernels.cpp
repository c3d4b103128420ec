#include "causaug/kernels.hpp"

#include <cmath>
#include <string>

namespace causaug {

std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept {
  if (n <= 1) return 0;
  const std::ptrdiff_t period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

std::vector<float> reflect_pad(const float* plane, std::size_t h, std::size_t w, std::size_t pad) {
  const std::size_t ph = h + 2 * pad;
  const std::size_t pw = w + 2 * pad;
  std::vector<float> out(ph * pw);
  const auto sh = static_cast<std::ptrdiff_t>(h);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto p = static_cast<std::ptrdiff_t>(pad);
  std::vector<std::size_t> col_src(pw);
  for (std::size_t x = 0; x < pw; ++x) {
    col_src[x] = static_cast<std::size_t>(reflect_index(static_cast<std::ptrdiff_t>(x) - p, sw));
  }
  for (std::size_t y = 0; y < ph; ++y) {
    const auto sy = static_cast<std::size_t>(reflect_index(static_cast<std::ptrdiff_t>(y) - p, sh));
    const float* src = plane + sy * w;
    float* dst = out.data() + y * pw;
    for (std::size_t x = 0; x < pad; ++x) dst[x] = src[col_src[x]];
    for (std::size_t x = 0; x < w; ++x) dst[pad + x] = src[x];
    for (std::size_t x = pad + w; x < pw; ++x) dst[x] = src[col_src[x]];
  }
  return out;
}

ImageTensor conv2d(const ImageTensor& input, const ConvKernel& kernel) {
  if (kernel.size % 2 == 0) {
    throw InvalidArgument("conv2d: kernel size " + std::to_string(kernel.size) + " is not odd");
  }
  if (kernel.in_channels != input.channels()) {
    throw InvalidArgument("conv2d: kernel expects " + std::to_string(kernel.in_channels) +
                          " input channels, image has " + std::to_string(input.channels()));
  }
  if (kernel.weights.size() != kernel.out_channels * kernel.in_channels * kernel.size * kernel.size) {
    throw InvalidArgument("conv2d: kernel weight count does not match its shape");
  }
  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const std::size_t k = kernel.size;
  const std::size_t pad = k / 2;
  const std::size_t pw = w + 2 * pad;

  std::vector<std::vector<float>> padded;
  padded.reserve(input.channels());
  for (std::size_t c = 0; c < input.channels(); ++c) {
    padded.push_back(reflect_pad(input.channel(c).data(), h, w, pad));
  }

  ImageTensor out(kernel.out_channels, h, w);
  for (std::size_t o = 0; o < kernel.out_channels; ++o) {
    float* dst = out.channel(o).data();
    for (std::size_t y = 0; y < h; ++y) {
      float* row = dst + y * w;
      for (std::size_t i = 0; i < kernel.in_channels; ++i) {
        const float* src = padded[i].data();
        for (std::size_t ky = 0; ky < k; ++ky) {
          const float* src_row = src + (y + ky) * pw;
          for (std::size_t kx = 0; kx < k; ++kx) {
            const float wv = kernel.at(o, i, ky, kx);
            const float* s = src_row + kx;
            for (std::size_t x = 0; x < w; ++x) row[x] += wv * s[x];
          }
        }
      }
    }
  }
  return out;
}

ImageTensor resize_bilinear(const ImageTensor& input, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw InvalidArgument("resize_bilinear: output size must be >= 1");
  if (input.empty()) throw InvalidArgument("resize_bilinear: empty input");
  const std::size_t in_h = input.height();
  const std::size_t in_w = input.width();

  struct Tap {
    std::size_t i0, i1;
    double t;
  };
  auto taps = [](std::size_t in, std::size_t out) {
    std::vector<Tap> result(out);
    for (std::size_t o = 0; o < out; ++o) {
      const double src = out == 1 ? 0.0
                                  : static_cast<double>(o) * static_cast<double>(in - 1) /
                                        static_cast<double>(out - 1);
      auto i0 = static_cast<std::size_t>(std::floor(src));
      if (i0 > in - 1) i0 = in - 1;
      const std::size_t i1 = i0 + 1 < in ? i0 + 1 : i0;
      result[o] = {i0, i1, src - static_cast<double>(i0)};
    }
    return result;
  };
  const auto ty = taps(in_h, out_h);
  const auto tx = taps(in_w, out_w);

  ImageTensor out(input.channels(), out_h, out_w);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const float* src = input.channel(c).data();
    float* dst = out.channel(c).data();
    for (std::size_t y = 0; y < out_h; ++y) {
      const float* r0 = src + ty[y].i0 * in_w;
      const float* r1 = src + ty[y].i1 * in_w;
      for (std::size_t x = 0; x < out_w; ++x) {
        // a + t (b - a) form keeps constant inputs exactly constant.
        const double top = r0[tx[x].i0] + tx[x].t * (static_cast<double>(r0[tx[x].i1]) - r0[tx[x].i0]);
        const double bot = r1[tx[x].i0] + tx[x].t * (static_cast<double>(r1[tx[x].i1]) - r1[tx[x].i0]);
        dst[y * out_w + x] = static_cast<float>(top + ty[y].t * (bot - top));
      }
    }
  }
  return out;
}

double frobenius_norm(const ImageTensor& input) {
  double acc = 0.0;
  for (float v : input.data()) acc += static_cast<double>(v) * v;
  return std::sqrt(acc);
}

ImageTensor gaussian_blur(const ImageTensor& input, double sigma) {
  if (sigma <= 0.0) return input;
  const auto radius = static_cast<std::size_t>(std::ceil(4.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double total = 0.0;
  for (std::size_t i = 0; i < taps.size(); ++i) {
    const double d = static_cast<double>(i) - static_cast<double>(radius);
    taps[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    total += taps[i];
  }
  for (auto& t : taps) t /= total;

  const std::size_t h = input.height();
  const std::size_t w = input.width();
  const auto sh = static_cast<std::ptrdiff_t>(h);
  const auto sw = static_cast<std::ptrdiff_t>(w);
  const auto r = static_cast<std::ptrdiff_t>(radius);
  ImageTensor out(input.channels(), h, w);
  std::vector<double> tmp(h * w);
  for (std::size_t c = 0; c < input.channels(); ++c) {
    const float* src = input.channel(c).data();
    for (std::ptrdiff_t y = 0; y < sh; ++y) {
      for (std::ptrdiff_t x = 0; x < sw; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t d = -r; d <= r; ++d) {
          acc += taps[static_cast<std::size_t>(d + r)] * src[y * sw + reflect_index(x + d, sw)];
        }
        tmp[static_cast<std::size_t>(y * sw + x)] = acc;
      }
    }
    float* dst = out.channel(c).data();
    for (std::ptrdiff_t y = 0; y < sh; ++y) {
      for (std::ptrdiff_t x = 0; x < sw; ++x) {
        double acc = 0.0;
        for (std::ptrdiff_t d = -r; d <= r; ++d) {
          acc += taps[static_cast<std::size_t>(d + r)] * tmp[static_cast<std::size_t>(reflect_index(y + d, sh) * sw + x)];
        }
        dst[y * sw + x] = static_cast<float>(acc);
      }
    }
  }
  return out;
}

}  // namespace causaug
