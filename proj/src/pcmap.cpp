#include "causaug/pcmap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "causaug/kernels.hpp"

namespace causaug {

std::string to_string(MapOrigin origin) {
  switch (origin) {
    case MapOrigin::bspline:
      return "bspline";
    case MapOrigin::superpixel:
      return "superpixel";
    case MapOrigin::constant:
      return "constant";
  }
  return "unknown";
}

ImageTensor PseudoCorrMap::as_tensor() const { return ImageTensor(1, height, width, values); }

std::size_t resolve_spacing(const BsplineLatticeConfig& config, std::size_t h, std::size_t w) {
  if (config.spacing) {
    if (*config.spacing < 2) {
      throw InvalidArgument("bspline_map: spacing " + std::to_string(*config.spacing) + " is below 2");
    }
    return *config.spacing;
  }
  return std::max<std::size_t>(2, std::min(h, w) / 4);
}

std::array<double, 4> cubic_bspline_weights(double t) noexcept {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double mt = 1.0 - t;
  return {mt * mt * mt / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
          (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
}

ControlLattice ControlLattice::covering(std::size_t h, std::size_t w, std::size_t spacing) {
  if (spacing < 2) throw InvalidArgument("ControlLattice: spacing below 2");
  ControlLattice lat;
  lat.spacing = spacing;
  lat.rows = (h > 0 ? (h - 1 + spacing - 1) / spacing : 0) + 1 + 2 * kPhantom;
  lat.cols = (w > 0 ? (w - 1 + spacing - 1) / spacing : 0) + 1 + 2 * kPhantom;
  lat.values.assign(lat.rows * lat.cols, 0.0);
  return lat;
}

namespace {

struct AxisTaps {
  std::size_t first_node;
  std::array<double, 4> weights;
};

std::vector<AxisTaps> axis_taps(std::size_t n, std::size_t spacing) {
  std::vector<AxisTaps> taps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cell = i / spacing;
    const double t = static_cast<double>(i % spacing) / static_cast<double>(spacing);
    // Node at position cell - 1 has index cell - 1 + kPhantom.
    taps[i] = {cell - 1 + ControlLattice::kPhantom, cubic_bspline_weights(t)};
  }
  return taps;
}

}  // namespace

std::vector<double> evaluate_lattice(const ControlLattice& lattice, std::size_t h, std::size_t w) {
  const auto ty = axis_taps(h, lattice.spacing);
  const auto tx = axis_taps(w, lattice.spacing);
  if (h > 0 && ty.back().first_node + 3 >= lattice.rows) {
    throw InvalidArgument("evaluate_lattice: lattice has too few rows for image height");
  }
  if (w > 0 && tx.back().first_node + 3 >= lattice.cols) {
    throw InvalidArgument("evaluate_lattice: lattice has too few columns for image width");
  }
  // Horizontal pass over every lattice row, then vertical pass.
  std::vector<double> rows(lattice.rows * w);
  for (std::size_t r = 0; r < lattice.rows; ++r) {
    for (std::size_t x = 0; x < w; ++x) {
      const auto& tap = tx[x];
      double acc = 0.0;
      for (std::size_t k = 0; k < 4; ++k) acc += tap.weights[k] * lattice.at(r, tap.first_node + k);
      rows[r * w + x] = acc;
    }
  }
  std::vector<double> out(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    const auto& tap = ty[y];
    for (std::size_t x = 0; x < w; ++x) {
      double acc = 0.0;
      for (std::size_t m = 0; m < 4; ++m) acc += tap.weights[m] * rows[(tap.first_node + m) * w + x];
      out[y * w + x] = acc;
    }
  }
  return out;
}

PseudoCorrMap bspline_map(std::size_t h, std::size_t w, const ControlLattice& lattice) {
  if (h == 0 || w == 0) throw InvalidArgument("bspline_map: image size must be >= 1");
  for (double v : lattice.values) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("bspline_map: control value outside [0, 1]");
  }
  const auto field = evaluate_lattice(lattice, h, w);
  PseudoCorrMap map{h, w, std::vector<float>(h * w), MapOrigin::bspline};
  for (std::size_t i = 0; i < field.size(); ++i) {
    // Convex combination of [0,1] values; the clamp only absorbs rounding.
    map.values[i] = static_cast<float>(std::clamp(field[i], 0.0, 1.0));
  }
  return map;
}

PseudoCorrMap bspline_map(std::size_t h, std::size_t w, const BsplineLatticeConfig& config,
                          SeedStream& stream) {
  if (h == 0 || w == 0) throw InvalidArgument("bspline_map: image size must be >= 1");
  auto lattice = ControlLattice::covering(h, w, resolve_spacing(config, h, w));
  for (auto& v : lattice.values) v = stream.uniform();
  return bspline_map(h, w, lattice);
}

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n), rank_(n, 0), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    std::size_t root = x;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[x] != root) {
      const std::size_t next = parent_[x];
      parent_[x] = root;
      x = next;
    }
    return root;
  }
  std::size_t join(std::size_t a, std::size_t b) {
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    if (rank_[a] == rank_[b]) ++rank_[a];
    return a;
  }
  std::size_t size(std::size_t root) const { return size_[root]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
  std::vector<std::size_t> size_;
};

struct Edge {
  double weight;
  std::size_t id;
  std::size_t a;
  std::size_t b;
};

}  // namespace

Segmentation felzenszwalb_graph(const ImageTensor& prepared, double k, std::size_t min_size) {
  if (!(k > 0.0)) throw InvalidArgument("felzenszwalb: k must be > 0");
  if (min_size < 1) throw InvalidArgument("felzenszwalb: min_size must be >= 1");
  const std::size_t h = prepared.height();
  const std::size_t w = prepared.width();
  const std::size_t n = h * w;

  auto distance = [&](std::size_t p, std::size_t q) {
    double acc = 0.0;
    for (std::size_t c = 0; c < prepared.channels(); ++c) {
      const double d = static_cast<double>(prepared.channel(c)[p]) - prepared.channel(c)[q];
      acc += d * d;
    }
    return std::sqrt(acc);
  };

  std::vector<Edge> edges;
  edges.reserve(2 * n);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t p = y * w + x;
      if (x + 1 < w) edges.push_back({distance(p, p + 1), 2 * p, p, p + 1});
      if (y + 1 < h) edges.push_back({distance(p, p + w), 2 * p + 1, p, p + w});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const Edge& l, const Edge& r) {
    return l.weight < r.weight || (l.weight == r.weight && l.id < r.id);
  });

  DisjointSets sets(n);
  std::vector<double> threshold(n, k);
  for (const auto& e : edges) {
    std::size_t a = sets.find(e.a);
    std::size_t b = sets.find(e.b);
    if (a == b) continue;
    if (e.weight <= threshold[a] && e.weight <= threshold[b]) {
      const std::size_t root = sets.join(a, b);
      threshold[root] = e.weight + k / static_cast<double>(sets.size(root));
    }
  }
  for (const auto& e : edges) {
    std::size_t a = sets.find(e.a);
    std::size_t b = sets.find(e.b);
    if (a != b && (sets.size(a) < min_size || sets.size(b) < min_size)) sets.join(a, b);
  }

  Segmentation seg{h, w, std::vector<std::int32_t>(n), 0};
  std::vector<std::int32_t> id_of_root(n, -1);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t root = sets.find(p);
    if (id_of_root[root] < 0) id_of_root[root] = static_cast<std::int32_t>(seg.count++);
    seg.labels[p] = id_of_root[root];
  }
  return seg;
}

Segmentation felzenszwalb(const ImageTensor& image, const FelzConfig& config) {
  if (image.empty()) throw InvalidArgument("felzenszwalb: empty image");
  const auto [lo_it, hi_it] = std::minmax_element(image.data().begin(), image.data().end());
  const double lo = *lo_it;
  const double range = static_cast<double>(*hi_it) - lo;
  ImageTensor scaled(image.channels(), image.height(), image.width());
  if (range > 0.0) {
    for (std::size_t i = 0; i < image.size(); ++i) {
      scaled.data()[i] = static_cast<float>(255.0 * (image.data()[i] - lo) / range);
    }
  }
  return felzenszwalb_graph(gaussian_blur(scaled, config.sigma), config.k, config.min_size);
}

PseudoCorrMap superpixel_map(const ImageTensor& image, const FelzConfig& config, SeedStream& stream) {
  const auto seg = felzenszwalb(image, config);
  std::vector<float> segment_value(seg.count);
  for (auto& v : segment_value) v = static_cast<float>(stream.uniform());
  PseudoCorrMap map{seg.height, seg.width, std::vector<float>(seg.labels.size()), MapOrigin::superpixel};
  for (std::size_t i = 0; i < seg.labels.size(); ++i) {
    map.values[i] = segment_value[static_cast<std::size_t>(seg.labels[i])];
  }
  return map;
}

PseudoCorrMap constant_map(std::size_t h, std::size_t w, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw InvalidArgument("constant_map: value " + std::to_string(value) + " outside [0, 1]");
  }
  return {h, w, std::vector<float>(h * w, static_cast<float>(value)), MapOrigin::constant};
}

}  // namespace causaug
