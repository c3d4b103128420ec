#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "causaug/error.hpp"
#include "causaug/kernels.hpp"
#include "causaug/seed_stream.hpp"
#include "causaug/tensor.hpp"

using namespace causaug;

namespace {

// Mirror without edge repeat, written independently of the library.
int mirror(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
  return i;
}

ImageTensor random_image(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed) {
  SeedStream s(seed);
  return ImageTensor(c, h, w, draw_gaussian(s, c * h * w));
}

}  // namespace

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  using A2 = std::array<std::uint32_t, 2>;
  CHECK(philox4x32_10(A4{0, 0, 0, 0}, A2{0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10(A4{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, A2{0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10(A4{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, A2{0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("seed stream identity and independence") {
  SeedStream a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());

  SeedStream parent(7);
  const auto before = parent.child("x", 3);
  parent.next_u64();
  auto after = parent.child("x", 3);
  auto copy = before;
  CHECK(copy.next_u64() == after.next_u64());

  SeedStream c1 = SeedStream(7).child("x", 1);
  SeedStream c2 = SeedStream(7).child("x", 2);
  SeedStream c3 = SeedStream(7).child("y", 1);
  const auto v1 = c1.next_u64();
  CHECK(v1 != c2.next_u64());
  CHECK(v1 != c3.next_u64());
  CHECK(SeedStream(7).child("x", 1).describe() == "7/x:1");
  CHECK(SeedStream(7).child("a", 0).child("b", 5).describe() == "7/a:0/b:5");
}

TEST_CASE("seed stream uniform range and below") {
  SeedStream s(3);
  for (int i = 0; i < 10000; ++i) {
    const double u = s.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(s.below(7) < 7u);
  }
}

TEST_CASE("draw_gaussian moments over 10^6 values") {
  SeedStream s(11);
  const auto v = draw_gaussian(s, 1000000);
  double mean = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (float x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  CHECK(std::abs(mean) <= 0.01);
  CHECK(std::abs(var - 1.0) <= 0.02);
}

TEST_CASE("draw_gaussian is deterministic and siblings are uncorrelated") {
  SeedStream a(5), b(5);
  CHECK(draw_gaussian(a, 1000) == draw_gaussian(b, 1000));

  SeedStream s1 = SeedStream(5).child("sib", 0);
  SeedStream s2 = SeedStream(5).child("sib", 1);
  const auto x = draw_gaussian(s1, 100000);
  const auto y = draw_gaussian(s2, 100000);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) <= 0.01);
}

TEST_CASE("reflect index") {
  CHECK(reflect_index(-1, 4) == 1);
  CHECK(reflect_index(-3, 4) == 3);
  CHECK(reflect_index(4, 4) == 2);
  CHECK(reflect_index(5, 4) == 1);
  CHECK(reflect_index(0, 1) == 0);
  CHECK(reflect_index(-2, 1) == 0);
  for (int i = -10; i < 14; ++i) CHECK(reflect_index(i, 4) == mirror(i, 4));
}

TEST_CASE("conv2d zero input gives zero output") {
  ConvKernel k(1, 1, 3);
  SeedStream s(1);
  const auto w = draw_gaussian(s, 9);
  k.weights.assign(w.begin(), w.end());
  const auto out = conv2d(ImageTensor(1, 3, 3, 0.0f), k);
  for (float v : out.data()) CHECK(v == 0.0f);
}

TEST_CASE("conv2d identity kernel") {
  ConvKernel k(1, 1, 3);
  k.at(0, 0, 1, 1) = 1.0f;
  const auto x = random_image(1, 5, 6, 2);
  CHECK(conv2d(x, k) == x);
}

TEST_CASE("conv2d ramp with all-ones kernel matches nested-loop oracle") {
  std::vector<float> ramp(16);
  std::iota(ramp.begin(), ramp.end(), 0.0f);
  const ImageTensor x(1, 4, 4, ramp);
  const auto out = conv2d(x, ConvKernel(1, 1, 3, 1.0f));
  for (int y = 0; y < 4; ++y) {
    for (int xx = 0; xx < 4; ++xx) {
      float expect = 0.0f;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) expect += ramp[mirror(y + dy, 4) * 4 + mirror(xx + dx, 4)];
      }
      CHECK(out.at(0, y, xx) == doctest::Approx(expect).epsilon(1e-6));
    }
  }
  // Corner (0,0): rows {1,0,1} x cols {1,0,1} of the ramp.
  CHECK(out.at(0, 0, 0) == doctest::Approx(5 + 4 + 5 + 1 + 0 + 1 + 5 + 4 + 5));
}

TEST_CASE("conv2d multi-channel matches oracle") {
  const auto x = random_image(2, 5, 4, 3);
  ConvKernel k(3, 2, 3);
  SeedStream s(4);
  const auto w = draw_gaussian(s, k.weights.size());
  k.weights.assign(w.begin(), w.end());
  const auto out = conv2d(x, k);
  REQUIRE(out.channels() == 3);
  for (std::size_t o = 0; o < 3; ++o) {
    for (int y = 0; y < 5; ++y) {
      for (int xx = 0; xx < 4; ++xx) {
        double expect = 0.0;
        for (std::size_t i = 0; i < 2; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              expect += k.at(o, i, ky, kx) * x.at(i, mirror(y + ky - 1, 5), mirror(xx + kx - 1, 4));
            }
          }
        }
        CHECK(out.at(o, y, xx) == doctest::Approx(expect).epsilon(1e-5));
      }
    }
  }
}

TEST_CASE("conv2d rejects even kernels and channel mismatch") {
  CHECK_THROWS_AS(conv2d(ImageTensor(1, 4, 4), ConvKernel(1, 1, 2)), InvalidArgument);
  CHECK_THROWS_AS(conv2d(ImageTensor(2, 4, 4), ConvKernel(1, 1, 3)), InvalidArgument);
}

TEST_CASE("conv2d is linear") {
  const auto x = random_image(1, 8, 8, 5);
  const auto y = random_image(1, 8, 8, 6);
  ConvKernel k(1, 1, 3);
  SeedStream s(7);
  const auto w = draw_gaussian(s, 9);
  k.weights.assign(w.begin(), w.end());
  const float a = 1.7f, b = -0.6f;
  ImageTensor comb(1, 8, 8);
  for (std::size_t i = 0; i < comb.size(); ++i) comb.data()[i] = a * x.data()[i] + b * y.data()[i];
  const auto lhs = conv2d(comb, k);
  const auto cx = conv2d(x, k);
  const auto cy = conv2d(y, k);
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const double rhs = a * cx.data()[i] + b * cy.data()[i];
    CHECK(std::abs(lhs.data()[i] - rhs) <= 1e-5 * std::max(1.0, std::abs(rhs)));
  }
}

TEST_CASE("conv2d is translation-equivariant away from borders") {
  const std::size_t n = 16;
  const auto big = random_image(1, n + 4, n + 4, 8);
  ConvKernel k(1, 1, 3);
  SeedStream s(9);
  const auto w = draw_gaussian(s, 9);
  k.weights.assign(w.begin(), w.end());
  const int dy = 2, dx = 3;
  ImageTensor a(1, n, n), b(1, n, n);
  for (std::size_t y = 0; y < n; ++y) {
    for (std::size_t x = 0; x < n; ++x) {
      a.at(0, y, x) = big.at(0, y, x);
      b.at(0, y, x) = big.at(0, y + dy, x + dx);
    }
  }
  // Two stacked convolutions: interior margin is 2.
  const auto ca = conv2d(conv2d(a, k), k);
  const auto cb = conv2d(conv2d(b, k), k);
  for (std::size_t y = 2; y + 2 < n - dy; ++y) {
    for (std::size_t x = 2; x + 2 < n - dx; ++x) {
      if (y + dy + 2 >= n || x + dx + 2 >= n) continue;
      CHECK(cb.at(0, y, x) == ca.at(0, y + dy, x + dx));
    }
  }
}

TEST_CASE("resize_bilinear") {
  SUBCASE("constant image stays constant") {
    const auto out = resize_bilinear(ImageTensor(1, 5, 7, 3.5f), 11, 3);
    for (float v : out.data()) CHECK(v == 3.5f);
  }
  SUBCASE("same size is identity") {
    const auto x = random_image(2, 6, 9, 10);
    const auto out = resize_bilinear(x, 6, 9);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(out.data()[i] - x.data()[i]) <= 1e-6);
  }
  SUBCASE("2x2 to 3x3 matches hand-evaluated corner-aligned values") {
    const ImageTensor x(1, 2, 2, std::vector<float>{0, 1, 2, 3});
    const auto out = resize_bilinear(x, 3, 3);
    const float expect[9] = {0, 0.5f, 1, 1, 1.5f, 2, 2, 2.5f, 3};
    for (int i = 0; i < 9; ++i) CHECK(out.data()[i] == doctest::Approx(expect[i]).epsilon(1e-7));
  }
  SUBCASE("zero output size is rejected") {
    CHECK_THROWS_AS(resize_bilinear(ImageTensor(1, 2, 2), 0, 3), InvalidArgument);
    CHECK_THROWS_AS(resize_bilinear(ImageTensor(1, 2, 2), 3, 0), InvalidArgument);
  }
}

TEST_CASE("frobenius_norm") {
  CHECK(frobenius_norm(ImageTensor(1, 3, 3, 0.0f)) == 0.0);
  CHECK(frobenius_norm(ImageTensor(1, 1, 1, -2.0f)) == 2.0);
  CHECK(frobenius_norm(ImageTensor(1, 2, 2, std::vector<float>{1, 2, 3, 4})) == doctest::Approx(std::sqrt(30.0)));
}

TEST_CASE("gaussian_blur preserves constants and mass") {
  const auto c = gaussian_blur(ImageTensor(1, 9, 9, 2.0f), 1.3);
  for (float v : c.data()) CHECK(v == doctest::Approx(2.0f).epsilon(1e-6));
  const auto x = random_image(1, 12, 12, 12);
  CHECK(gaussian_blur(x, 0.0) == x);
}

TEST_CASE("tensor invariants") {
  CHECK_THROWS_AS(ImageTensor(1, 2, 2, std::vector<float>{1, 2, 3}), InvalidArgument);
  ImageTensor x(1, 2, 2);
  x.data()[1] = std::nanf("");
  CHECK_FALSE(x.all_finite());
  CHECK_THROWS_AS(x.require_finite("test"), InvalidArgument);
  CHECK_THROWS_AS(LabelMask(2, 1, 2, std::vector<std::int32_t>{0, 2}).validate(), InvalidArgument);
}
