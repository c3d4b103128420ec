#pragma once

#include <cstddef>
#include <vector>

#include "causaug/tensor.hpp"

namespace causaug {

/// Mirror index into [0, n) without repeating the edge sample
/// (..., 2, 1, 0, 1, 2, ..., n-2, n-1, n-2, ...). n == 1 maps everything to 0.
std::ptrdiff_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) noexcept;

/// Copy of one plane padded by `pad` pixels on every side with reflect padding.
/// Result is (h + 2 pad) x (w + 2 pad), row-major.
std::vector<float> reflect_pad(const float* plane, std::size_t h, std::size_t w, std::size_t pad);

/// "Same" 2-D convolution (cross-correlation, as in deep-learning frameworks)
/// with reflect padding and no bias. For every output pixel the products are
/// accumulated in the fixed order (in_channel, ky, kx), so results are
/// bit-reproducible and exactly translation-equivariant away from borders.
ImageTensor conv2d(const ImageTensor& input, const ConvKernel& kernel);

/// Bilinear resize with corner-aligned sampling: output pixel i samples input
/// coordinate i * (in - 1) / (out - 1); a 1-pixel output axis samples 0.
ImageTensor resize_bilinear(const ImageTensor& input, std::size_t out_h, std::size_t out_w);

/// sqrt(sum x^2) over every element, accumulated in double.
double frobenius_norm(const ImageTensor& input);

/// Separable Gaussian smoothing per channel with reflect padding; the kernel
/// radius is ceil(4 sigma). sigma <= 0 returns the input unchanged.
ImageTensor gaussian_blur(const ImageTensor& input, double sigma);

}  // namespace causaug
