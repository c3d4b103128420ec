#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "causaug/error.hpp"
#include "causaug/pcmap.hpp"
#include "felz_reference.hpp"

using namespace causaug;

namespace {

// Uniform cubic B-spline basis written out term by term.
double basis(int m, double t) {
  switch (m) {
    case 0: return (1 - t) * (1 - t) * (1 - t) / 6.0;
    case 1: return (3 * t * t * t - 6 * t * t + 4) / 6.0;
    case 2: return (-3 * t * t * t + 3 * t * t + 3 * t + 1) / 6.0;
    default: return t * t * t / 6.0;
  }
}

// Node (r, c) sits at pixel ((r - 3) s, (c - 3) s).
double oracle(const ControlLattice& lat, double y, double x) {
  const double u = y / lat.spacing + 3.0;
  const double v = x / lat.spacing + 3.0;
  const int i = static_cast<int>(std::floor(u));
  const int j = static_cast<int>(std::floor(v));
  double s = 0.0;
  for (int m = 0; m < 4; ++m) {
    for (int n = 0; n < 4; ++n) s += basis(m, u - i) * basis(n, v - j) * lat.at(i - 1 + m, j - 1 + n);
  }
  return s;
}

}  // namespace

TEST_CASE("cubic B-spline weights form a partition of unity") {
  for (int i = 0; i <= 1000; ++i) {
    const double t = i / 1000.0;
    const auto w = cubic_bspline_weights(t);
    double sum = 0.0;
    for (int m = 0; m < 4; ++m) {
      CHECK(w[m] == doctest::Approx(basis(m, t)).epsilon(1e-12));
      CHECK(w[m] >= 0.0);
      sum += w[m];
    }
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
}

TEST_CASE("spacing defaults and validation") {
  CHECK(resolve_spacing({}, 192, 192) == 48);
  CHECK(resolve_spacing({}, 64, 100) == 16);
  CHECK(resolve_spacing({}, 5, 5) == 2);
  CHECK(resolve_spacing({7}, 64, 64) == 7);
  CHECK_THROWS_AS(resolve_spacing({1}, 64, 64), InvalidArgument);
}

TEST_CASE("lattice covers the image with three phantom nodes per border") {
  const auto lat = ControlLattice::covering(64, 40, 16);
  CHECK(lat.rows == 4 + 1 + 6);
  CHECK(lat.cols == 3 + 1 + 6);
}

TEST_CASE("bspline map: constant control values give a constant map") {
  for (double c : {0.0, 0.3, 1.0}) {
    auto lat = ControlLattice::covering(20, 30, 5);
    std::fill(lat.values.begin(), lat.values.end(), c);
    const auto map = bspline_map(20, 30, lat);
    CHECK(map.origin == MapOrigin::bspline);
    for (float v : map.values) CHECK(std::abs(v - c) <= 1e-6);
  }
}

TEST_CASE("bspline map matches the 16-term oracle") {
  SeedStream s(3);
  auto lat = ControlLattice::covering(37, 29, 6);
  for (auto& v : lat.values) v = s.uniform();
  const auto map = bspline_map(37, 29, lat);
  const auto dense = evaluate_lattice(lat, 37, 29);
  for (std::size_t y = 0; y < 37; ++y) {
    for (std::size_t x = 0; x < 29; ++x) {
      const double o = oracle(lat, static_cast<double>(y), static_cast<double>(x));
      CHECK(std::abs(dense[y * 29 + x] - o) <= 1e-12);
      CHECK(std::abs(map.at(y, x) - o) <= 1e-6);
    }
  }
}

TEST_CASE("bspline map: range, determinism and smoothness") {
  for (std::size_t spacing : {2, 4, 8, 16}) {
    auto s1 = SeedStream(4).child("s", spacing);
    auto s2 = SeedStream(4).child("s", spacing);
    const auto a = bspline_map(48, 40, {spacing}, s1);
    const auto b = bspline_map(48, 40, {spacing}, s2);
    CHECK(a.values == b.values);
    double max_grad = 0.0;
    for (std::size_t y = 0; y < 48; ++y) {
      for (std::size_t x = 0; x < 40; ++x) {
        CHECK((a.at(y, x) >= 0.0f && a.at(y, x) <= 1.0f));
        if (x + 1 < 40) max_grad = std::max(max_grad, std::abs(double(a.at(y, x + 1)) - a.at(y, x)));
        if (y + 1 < 48) max_grad = std::max(max_grad, std::abs(double(a.at(y + 1, x)) - a.at(y, x)));
      }
    }
    // Largest slope of a uniform cubic B-spline with control values in [0, 1].
    CHECK(max_grad <= 0.75 / static_cast<double>(spacing) + 1e-6);
  }
}

TEST_CASE("bspline map rejects out-of-range control values and small spacing") {
  auto lat = ControlLattice::covering(8, 8, 2);
  lat.values[0] = 1.5;
  CHECK_THROWS_AS(bspline_map(8, 8, lat), InvalidArgument);
  SeedStream s(1);
  CHECK_THROWS_AS(bspline_map(8, 8, BsplineLatticeConfig{1}, s), InvalidArgument);
}

TEST_CASE("felzenszwalb: constant image is one segment") {
  const ImageTensor x(1, 9, 11, 4.0f);
  const auto seg = felzenszwalb(x, FelzConfig{});
  CHECK(seg.count == 1);
  SeedStream s(5);
  const auto map = superpixel_map(x, FelzConfig{}, s);
  for (float v : map.values) CHECK(v == map.values[0]);
}

TEST_CASE("felzenszwalb: two contrasting halves give two segments") {
  ImageTensor x(1, 6, 6);
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t xx = 0; xx < 6; ++xx) x.at(0, y, xx) = xx < 3 ? 0.0f : 200.0f;
  }
  const auto seg = felzenszwalb_graph(x, 1.0, 1);
  CHECK(seg.count == 2);
  // Connected components of equal intensity.
  for (std::size_t y = 0; y < 6; ++y) {
    for (std::size_t xx = 0; xx < 6; ++xx) CHECK(seg.labels[y * 6 + xx] == (xx < 3 ? 0 : 1));
  }
  CHECK(testing::reference_segmentation(x, 1.0, 1) == seg.labels);
}

TEST_CASE("felzenszwalb matches the naive reference on small 3-level images") {
  std::size_t checked = 0;
  for (std::size_t h = 1; h <= 3; ++h) {
    for (std::size_t w = 1; w <= 3; ++w) {
      const std::size_t n = h * w;
      std::size_t total = 1;
      for (std::size_t i = 0; i < n; ++i) total *= 3;
      for (std::size_t code = 0; code < total; ++code) {
        ImageTensor x(1, h, w);
        std::size_t c = code;
        for (std::size_t i = 0; i < n; ++i, c /= 3) x.data()[i] = static_cast<float>(c % 3);
        for (const auto& [k, min_size] : {std::pair{0.5, std::size_t{1}}, std::pair{2.0, std::size_t{2}}}) {
          const auto seg = felzenszwalb_graph(x, k, min_size);
          REQUIRE(seg.labels == testing::reference_segmentation(x, k, min_size));
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 0);
}

TEST_CASE("superpixel maps are piecewise constant and deterministic") {
  SeedStream g(6);
  const ImageTensor x(1, 24, 24, draw_gaussian(g, 576));
  FelzConfig cfg;
  cfg.min_size = 10;
  const auto seg = felzenszwalb(x, cfg);
  auto s1 = SeedStream(7);
  auto s2 = SeedStream(7);
  const auto a = superpixel_map(x, cfg, s1);
  const auto b = superpixel_map(x, cfg, s2);
  CHECK(a.values == b.values);
  CHECK(a.origin == MapOrigin::superpixel);
  for (std::size_t p = 0; p < 576; ++p) {
    CHECK((a.values[p] >= 0.0f && a.values[p] < 1.0f));
    for (std::size_t q = 0; q < p; ++q) {
      if (seg.labels[p] == seg.labels[q]) CHECK(a.values[p] == a.values[q]);
    }
  }
  CHECK(testing::canonical_partition(seg.labels) == seg.labels);
  CHECK(seg.count == static_cast<std::size_t>(*std::max_element(seg.labels.begin(), seg.labels.end()) + 1));
}

TEST_CASE("constant_map") {
  const auto one = constant_map(3, 4, 1.0);
  for (float v : one.values) CHECK(v == 1.0f);
  CHECK(one.origin == MapOrigin::constant);
  for (float v : constant_map(2, 2, 0.5).values) CHECK(v == 0.5f);
  CHECK_THROWS_AS(constant_map(2, 2, 2.0), InvalidArgument);
  CHECK_THROWS_AS(constant_map(2, 2, -0.1), InvalidArgument);
}
