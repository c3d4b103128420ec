#include "causaug/png.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "causaug/npy.hpp"

namespace causaug {

GrayImage make_preview(std::span<const ImageTensor> tiles) {
  GrayImage out;
  if (tiles.empty()) return out;
  out.height = tiles.front().height();
  for (const auto& t : tiles) {
    if (t.height() != out.height) throw InvalidArgument("make_preview: tiles differ in height");
    out.width += t.channels() * t.width();
  }
  out.pixels.assign(out.height * out.width, 0);

  std::size_t x0 = 0;
  for (const auto& t : tiles) {
    for (std::size_t c = 0; c < t.channels(); ++c) {
      const auto plane = t.channel(c);
      const auto [lo_it, hi_it] = std::minmax_element(plane.begin(), plane.end());
      const double lo = plane.empty() ? 0.0 : *lo_it;
      const double hi = plane.empty() ? 0.0 : *hi_it;
      const double range = hi - lo;
      for (std::size_t y = 0; y < t.height(); ++y) {
        for (std::size_t x = 0; x < t.width(); ++x) {
          std::uint8_t v = 0;
          if (range > 0.0) {
            v = static_cast<std::uint8_t>(std::lround(255.0 * (plane[y * t.width() + x] - lo) / range));
          }
          out.pixels[y * out.width + x0 + x] = v;
        }
      }
      x0 += t.width();
    }
  }
  return out;
}

std::vector<std::uint8_t> encode_png(const GrayImage& image) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  desc.width = static_cast<png_uint_32>(image.width);
  desc.height = static_cast<png_uint_32>(image.height);
  desc.format = PNG_FORMAT_GRAY;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&desc, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + desc.message);
  }
  std::vector<std::uint8_t> bytes(size);
  if (!png_image_write_to_memory(&desc, bytes.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw IoError(std::string("PNG encode failed: ") + desc.message);
  }
  bytes.resize(size);
  return bytes;
}

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image desc{};
  desc.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&desc, bytes.data(), bytes.size())) {
    throw IoError(std::string("PNG decode failed: ") + desc.message);
  }
  desc.format = PNG_FORMAT_GRAY;
  GrayImage out;
  out.width = desc.width;
  out.height = desc.height;
  out.pixels.resize(PNG_IMAGE_SIZE(desc));
  if (!png_image_finish_read(&desc, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&desc);
    throw IoError(std::string("PNG decode failed: ") + desc.message);
  }
  return out;
}

void save_png_preview(std::span<const ImageTensor> tiles, const std::filesystem::path& path) {
  write_file(path, encode_png(make_preview(tiles)));
}

void save_png_preview(const ImageTensor& tensor, const std::filesystem::path& path) {
  save_png_preview(std::span<const ImageTensor>(&tensor, 1), path);
}

}  // namespace causaug
