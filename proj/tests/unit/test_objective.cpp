#include <doctest.h>

#include <cmath>
#include <numeric>

#include "causaug/error.hpp"
#include "causaug/objective.hpp"
#include "causaug/seed_stream.hpp"

using namespace causaug;

namespace {

LogitsMap random_logits(std::size_t k, std::size_t h, std::size_t w, SeedStream& s, double scale = 2.0) {
  LogitsMap m(k, h, w);
  for (auto& v : m.data) v = scale * s.gaussian();
  return m;
}

LabelMask random_labels(std::size_t k, std::size_t h, std::size_t w, SeedStream& s) {
  LabelMask m(k, h, w);
  for (auto& v : m.data()) v = static_cast<std::int32_t>(s.below(k));
  return m;
}

// Central differences of f at every logit, h = 1e-3.
template <typename F>
std::vector<double> numeric_grad(LogitsMap at, F&& f) {
  std::vector<double> g(at.data.size());
  for (std::size_t i = 0; i < at.data.size(); ++i) {
    const double orig = at.data[i];
    at.data[i] = orig + 1e-3;
    const double up = f(at);
    at.data[i] = orig - 1e-3;
    const double down = f(at);
    at.data[i] = orig;
    g[i] = (up - down) / 2e-3;
  }
  return g;
}

void check_close(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  REQUIRE(analytic.size() == numeric.size());
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    CHECK(std::abs(analytic[i] - numeric[i]) <= 1e-4 * std::max(1.0, std::abs(numeric[i])));
  }
}

}  // namespace

TEST_CASE("softmax_probs") {
  LogitsMap equal(3, 1, 2, 0.7);
  for (double p : softmax_probs(equal).data) CHECK(p == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  LogitsMap big(2, 1, 1);
  big.data = {1000.0, 0.0};
  const auto pb = softmax_probs(big);
  CHECK(pb.data[0] == 1.0);
  CHECK(pb.data[1] == doctest::Approx(0.0));
  CHECK(std::isfinite(pb.data[1]));

  LogitsMap three(3, 1, 1);
  three.data = {1.0, 2.0, 3.0};
  const double z = std::exp(1.0) + std::exp(2.0) + std::exp(3.0);
  const auto p3 = softmax_probs(three);
  for (int k = 0; k < 3; ++k) CHECK(p3.data[k] == doctest::Approx(std::exp(k + 1.0) / z).epsilon(1e-14));

  SeedStream s(1);
  const auto r = softmax_probs(random_logits(4, 3, 3, s));
  for (std::size_t p = 0; p < 9; ++p) {
    double sum = 0;
    for (std::size_t k = 0; k < 4; ++k) sum += r.data[k * 9 + p];
    CHECK(std::abs(sum - 1.0) <= 1e-6);
  }
}

TEST_CASE("seg_loss: uniform probabilities give CE = ln K exactly") {
  for (std::size_t k : {2, 3, 5}) {
    SeedStream s(k);
    const auto labels = random_labels(k, 3, 4, s);
    const auto loss = seg_loss(LogitsMap(k, 3, 4, 0.25), labels);
    CHECK(loss.ce == std::log(static_cast<double>(k)));
  }
}

TEST_CASE("seg_loss: confident correct logits drive the loss to zero") {
  SeedStream s(2);
  const auto labels = random_labels(3, 4, 4, s);
  LogitsMap logits(3, 4, 4, -50.0);
  for (std::size_t p = 0; p < 16; ++p) logits.data[labels.data()[p] * 16 + p] = 50.0;
  const auto loss = seg_loss(logits, labels);
  CHECK(loss.ce <= 1e-3);
  CHECK(loss.dice <= 1e-3);
  CHECK(loss.value <= 1e-3);
}

TEST_CASE("seg_loss: soft Dice value from hand evaluation") {
  // One pixel per class, 2 classes, uniform probabilities.
  LabelMask labels(2, 1, 2, std::vector<std::int32_t>{0, 1});
  const auto loss = seg_loss(LogitsMap(2, 1, 2, 0.0), labels);
  // Each class: (2 * 0.5 + 1) / (1 + 1 + 1) = 2/3.
  CHECK(loss.dice == doctest::Approx(1.0 - 2.0 / 3.0).epsilon(1e-14));
  SegLossOptions fg_only;
  fg_only.dice_include_background = false;
  CHECK(seg_loss(LogitsMap(2, 1, 2, 0.0), labels, fg_only).dice == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("seg_loss: gradient matches finite differences on a 3-class 2x2 instance") {
  SeedStream s(3);
  const auto logits = random_logits(3, 2, 2, s);
  const auto labels = random_labels(3, 2, 2, s);
  const auto analytic = seg_loss(logits, labels).grad.data;
  check_close(analytic, numeric_grad(logits, [&](const LogitsMap& l) { return seg_loss(l, labels).value; }));
}

TEST_CASE("seg_loss: class index out of range") {
  LabelMask labels(3, 1, 2, std::vector<std::int32_t>{0, 3});
  CHECK_THROWS_AS(seg_loss(LogitsMap(3, 1, 2), labels), InvalidArgument);
  LabelMask neg(3, 1, 2, std::vector<std::int32_t>{-1, 0});
  CHECK_THROWS_AS(seg_loss(LogitsMap(3, 1, 2), neg), InvalidArgument);
  CHECK_THROWS_AS(seg_loss(LogitsMap(3, 2, 2), neg), InvalidArgument);
}

TEST_CASE("seg_loss is permutation-equivariant in pixels") {
  SeedStream s(4);
  const auto logits = random_logits(3, 4, 4, s);
  const auto labels = random_labels(3, 4, 4, s);
  std::vector<std::size_t> perm(16);
  std::iota(perm.begin(), perm.end(), 0);
  for (std::size_t i = 15; i > 0; --i) std::swap(perm[i], perm[s.below(i + 1)]);
  LogitsMap pl(3, 4, 4);
  LabelMask py(3, 4, 4);
  for (std::size_t p = 0; p < 16; ++p) {
    py.data()[p] = labels.data()[perm[p]];
    for (std::size_t k = 0; k < 3; ++k) pl.data[k * 16 + p] = logits.data[k * 16 + perm[p]];
  }
  CHECK(std::abs(seg_loss(pl, py).value - seg_loss(logits, labels).value) <= 1e-6);
}

TEST_CASE("kl_consistency") {
  SeedStream s(5);
  const auto a = random_logits(3, 3, 3, s);
  const auto b = random_logits(3, 3, 3, s);
  CHECK(kl_consistency(a, a).value == 0.0);
  CHECK(kl_consistency(a, b).value >= 0.0);
  CHECK(kl_consistency(a, b).value != doctest::Approx(kl_consistency(b, a).value));

  LogitsMap p(2, 1, 1), q(2, 1, 1);
  p.data = {0.0, -1000.0};
  q.data = {0.0, 0.0};
  CHECK(kl_consistency(p, q).value == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(kl_consistency(LogitsMap(2, 1, 1), LogitsMap(2, 1, 2)), InvalidArgument);
}

TEST_CASE("kl_consistency: gradients for both arguments") {
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    SeedStream s = SeedStream(6).child("t", trial);
    const auto a = random_logits(2 + trial % 3, 3, 2, s);
    const auto b = random_logits(2 + trial % 3, 3, 2, s);
    const auto r = kl_consistency(a, b);
    check_close(r.grad_first.data, numeric_grad(a, [&](const LogitsMap& l) { return kl_consistency(l, b).value; }));
    check_close(r.grad_second.data, numeric_grad(b, [&](const LogitsMap& l) { return kl_consistency(a, l).value; }));
  }
}

TEST_CASE("total_loss") {
  SeedStream s(7);
  const auto a = random_logits(3, 3, 3, s);
  const auto b = random_logits(3, 3, 3, s);
  const auto y = random_labels(3, 3, 3, s);

  const auto zero = total_loss(a, b, y, 0.0);
  CHECK(zero.report.total == zero.report.seg1 + zero.report.seg2);
  CHECK(total_loss(a, a, y).report.kl == 0.0);

  const auto full = total_loss(a, b, y, 10.0);
  CHECK(full.report.lambda_div == 10.0);
  CHECK(std::abs(full.report.total - (full.report.seg1 + full.report.seg2 + 10.0 * full.report.kl)) <= 1e-6);
  CHECK(full.report.seg1 >= 0.0);
  CHECK(full.report.seg2 >= 0.0);

  check_close(full.grad1.data, numeric_grad(a, [&](const LogitsMap& l) { return total_loss(l, b, y).report.total; }));
  check_close(full.grad2.data, numeric_grad(b, [&](const LogitsMap& l) { return total_loss(a, l, y).report.total; }));
}

TEST_CASE("total_loss gradients on random 2x2 to 4x4 instances") {
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    SeedStream s = SeedStream(8).child("trial", trial);
    const std::size_t k = 2 + s.below(3);
    const std::size_t h = 2 + s.below(3);
    const std::size_t w = 2 + s.below(3);
    const auto a = random_logits(k, h, w, s);
    const auto b = random_logits(k, h, w, s);
    const auto y = random_labels(k, h, w, s);
    const auto r = total_loss(a, b, y);
    check_close(r.grad1.data, numeric_grad(a, [&](const LogitsMap& l) { return total_loss(l, b, y).report.total; }));
    check_close(r.grad2.data, numeric_grad(b, [&](const LogitsMap& l) { return total_loss(a, l, y).report.total; }));
  }
}
