#include "causaug/conventional.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "causaug/pcmap.hpp"

namespace causaug {

ConventionalAugConfig ConventionalAugConfig::identity() {
  ConventionalAugConfig c;
  c.p_affine = c.p_elastic = c.p_brightness_contrast = c.p_gamma = c.p_noise = 0.0;
  return c;
}

void ConventionalAugConfig::validate() const {
  for (double p : {p_affine, p_elastic, p_brightness_contrast, p_gamma, p_noise}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("ConventionalAugConfig: probability outside [0, 1]");
  }
  if (!(scale_min > 0.0 && scale_min <= scale_max)) throw InvalidArgument("ConventionalAugConfig: bad scale range");
  if (!(contrast_min <= contrast_max)) throw InvalidArgument("ConventionalAugConfig: bad contrast range");
  if (!(gamma_min > 0.0 && gamma_min <= gamma_max)) throw InvalidArgument("ConventionalAugConfig: bad gamma range");
  if (rotation_deg < 0.0 || translate_frac < 0.0 || elastic_magnitude < 0.0 || brightness_range < 0.0 ||
      noise_sigma < 0.0) {
    throw InvalidArgument("ConventionalAugConfig: ranges must be non-negative");
  }
  if (elastic_spacing && *elastic_spacing < 2) throw InvalidArgument("ConventionalAugConfig: elastic spacing below 2");
}

namespace {

// Sampling callback receives output (y, x) and writes input coordinates.
template <typename Map>
std::pair<ImageTensor, LabelMask> warp(const ImageTensor& image, const LabelMask& mask, Map&& source) {
  if (!mask.aligned_with(image)) throw InvalidArgument("warp: image and mask are not aligned");
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  const auto max_y = static_cast<double>(h - 1);
  const auto max_x = static_cast<double>(w - 1);
  ImageTensor out(image.channels(), h, w);
  LabelMask out_mask(mask.classes(), h, w);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double sy = 0.0, sx = 0.0;
      source(y, x, sy, sx);
      sy = std::clamp(sy, 0.0, max_y);
      sx = std::clamp(sx, 0.0, max_x);
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const auto x0 = static_cast<std::size_t>(std::floor(sx));
      const std::size_t y1 = std::min(y0 + 1, h - 1);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double fy = sy - static_cast<double>(y0);
      const double fx = sx - static_cast<double>(x0);
      for (std::size_t c = 0; c < image.channels(); ++c) {
        const double top = image.at(c, y0, x0) + fx * (static_cast<double>(image.at(c, y0, x1)) - image.at(c, y0, x0));
        const double bot = image.at(c, y1, x0) + fx * (static_cast<double>(image.at(c, y1, x1)) - image.at(c, y1, x0));
        out.at(c, y, x) = static_cast<float>(top + fy * (bot - top));
      }
      out_mask.at(y, x) = mask.at(static_cast<std::size_t>(std::lround(sy)), static_cast<std::size_t>(std::lround(sx)));
    }
  }
  return {std::move(out), std::move(out_mask)};
}

}  // namespace

std::pair<ImageTensor, LabelMask> warp_affine(const ImageTensor& image, const LabelMask& mask,
                                              const AffineParams& params) {
  if (!(params.scale > 0.0)) throw InvalidArgument("warp_affine: scale must be > 0");
  const double theta = params.rotation_deg * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double cy = (static_cast<double>(image.height()) - 1.0) / 2.0;
  const double cx = (static_cast<double>(image.width()) - 1.0) / 2.0;
  return warp(image, mask, [&](std::size_t y, std::size_t x, double& sy, double& sx) {
    // Forward: q = c + scale * R(theta) (p - c) + t. Invert for p.
    const double qx = (static_cast<double>(x) - cx - params.translate_x) / params.scale;
    const double qy = (static_cast<double>(y) - cy - params.translate_y) / params.scale;
    sx = cx + c * qx + s * qy;
    sy = cy - s * qx + c * qy;
  });
}

std::pair<ImageTensor, LabelMask> warp_displacement(const ImageTensor& image, const LabelMask& mask,
                                                    const std::vector<double>& dy, const std::vector<double>& dx) {
  const std::size_t n = image.plane_size();
  if (dy.size() != n || dx.size() != n) throw InvalidArgument("warp_displacement: field size mismatch");
  const std::size_t w = image.width();
  return warp(image, mask, [&](std::size_t y, std::size_t x, double& sy, double& sx) {
    sy = static_cast<double>(y) + dy[y * w + x];
    sx = static_cast<double>(x) + dx[y * w + x];
  });
}

ImageTensor adjust_brightness_contrast(const ImageTensor& image, double contrast, double brightness) {
  ImageTensor out = image;
  for (auto& v : out.data()) v = static_cast<float>(contrast * v + brightness);
  return out;
}

ImageTensor adjust_gamma(const ImageTensor& image, double gamma) {
  if (!(gamma > 0.0)) throw InvalidArgument("adjust_gamma: gamma must be > 0");
  if (gamma == 1.0) return image;
  ImageTensor out = image;
  for (std::size_t c = 0; c < out.channels(); ++c) {
    auto plane = out.channel(c);
    const auto [lo_it, hi_it] = std::minmax_element(plane.begin(), plane.end());
    const double lo = *lo_it;
    const double range = static_cast<double>(*hi_it) - lo;
    if (!(range > 0.0)) continue;
    for (auto& v : plane) v = static_cast<float>(lo + range * std::pow((v - lo) / range, gamma));
  }
  return out;
}

std::pair<ImageTensor, LabelMask> conventional_augment(const ImageTensor& image, const LabelMask& mask,
                                                       const SeedStream& stream,
                                                       const ConventionalAugConfig& config) {
  config.validate();
  if (!mask.aligned_with(image)) throw InvalidArgument("conventional_augment: image and mask are not aligned");
  ImageTensor img = image;
  LabelMask lab = mask;
  const std::size_t h = image.height();
  const std::size_t w = image.width();

  if (auto s = stream.child("affine"); s.uniform() < config.p_affine) {
    AffineParams p;
    p.rotation_deg = s.uniform(-config.rotation_deg, config.rotation_deg);
    p.scale = s.uniform(config.scale_min, config.scale_max);
    p.translate_y = s.uniform(-config.translate_frac, config.translate_frac) * static_cast<double>(h);
    p.translate_x = s.uniform(-config.translate_frac, config.translate_frac) * static_cast<double>(w);
    std::tie(img, lab) = warp_affine(img, lab, p);
  }
  if (auto s = stream.child("elastic"); s.uniform() < config.p_elastic) {
    const std::size_t spacing = resolve_spacing({config.elastic_spacing}, h, w);
    auto ly = ControlLattice::covering(h, w, spacing);
    auto lx = ControlLattice::covering(h, w, spacing);
    for (auto& v : ly.values) v = s.uniform(-config.elastic_magnitude, config.elastic_magnitude);
    for (auto& v : lx.values) v = s.uniform(-config.elastic_magnitude, config.elastic_magnitude);
    std::tie(img, lab) = warp_displacement(img, lab, evaluate_lattice(ly, h, w), evaluate_lattice(lx, h, w));
  }
  if (auto s = stream.child("brightness_contrast"); s.uniform() < config.p_brightness_contrast) {
    const double a = s.uniform(config.contrast_min, config.contrast_max);
    const double b = s.uniform(-config.brightness_range, config.brightness_range);
    img = adjust_brightness_contrast(img, a, b);
  }
  if (auto s = stream.child("gamma"); s.uniform() < config.p_gamma) {
    img = adjust_gamma(img, s.uniform(config.gamma_min, config.gamma_max));
  }
  if (auto s = stream.child("noise"); s.uniform() < config.p_noise) {
    for (auto& v : img.data()) v = static_cast<float>(v + config.noise_sigma * s.gaussian());
  }
  return {std::move(img), std::move(lab)};
}

}  // namespace causaug
