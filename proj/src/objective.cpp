#include "causaug/objective.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace causaug {

namespace {

const double kLogFloor = std::log(kProbFloor);

// log-softmax per pixel, same layout as logits.
LogitsMap log_softmax(const LogitsMap& logits) {
  LogitsMap out(logits.classes, logits.height, logits.width);
  const std::size_t n = logits.pixels();
  for (std::size_t p = 0; p < n; ++p) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < logits.classes; ++k) mx = std::max(mx, logits.data[k * n + p]);
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.classes; ++k) sum += std::exp(logits.data[k * n + p] - mx);
    // (z - max) - log(sum) rather than z - (max + log(sum)): equal logits give -log(K) exactly.
    const double log_sum = std::log(sum);
    for (std::size_t k = 0; k < logits.classes; ++k) out.data[k * n + p] = (logits.data[k * n + p] - mx) - log_sum;
  }
  return out;
}

}  // namespace

LogitsMap softmax_probs(const LogitsMap& logits) {
  LogitsMap out(logits.classes, logits.height, logits.width);
  const std::size_t n = logits.pixels();
  for (std::size_t p = 0; p < n; ++p) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < logits.classes; ++k) mx = std::max(mx, logits.data[k * n + p]);
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.classes; ++k) {
      const double e = std::exp(logits.data[k * n + p] - mx);
      out.data[k * n + p] = e;
      sum += e;
    }
    for (std::size_t k = 0; k < logits.classes; ++k) out.data[k * n + p] /= sum;
  }
  return out;
}

SegLoss seg_loss(const LogitsMap& logits, const LabelMask& labels, const SegLossOptions& options) {
  if (labels.height() != logits.height || labels.width() != logits.width) {
    throw InvalidArgument("seg_loss: label mask and logits differ in spatial size");
  }
  const std::size_t K = logits.classes;
  const std::size_t n = logits.pixels();
  if (n == 0 || K == 0) throw InvalidArgument("seg_loss: empty logits");
  for (std::size_t p = 0; p < n; ++p) {
    const auto y = labels.data()[p];
    if (y < 0 || static_cast<std::size_t>(y) >= K) {
      throw InvalidArgument("seg_loss: class index " + std::to_string(y) + " at pixel " + std::to_string(p) +
                            " outside [0, " + std::to_string(K) + ")");
    }
  }
  const LogitsMap logp = log_softmax(logits);
  const LogitsMap prob = softmax_probs(logits);
  const double inv_n = 1.0 / static_cast<double>(n);

  SegLoss out;
  out.grad = LogitsMap(K, logits.height, logits.width);

  // Mean taken relative to the first pixel's term, so identical terms average exactly.
  const double ce_ref = -logp.data[static_cast<std::size_t>(labels.data()[0]) * n];
  double ce = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    const auto y = static_cast<std::size_t>(labels.data()[p]);
    ce += -logp.data[y * n + p] - ce_ref;
    for (std::size_t k = 0; k < K; ++k) {
      out.grad.data[k * n + p] = (prob.data[k * n + p] - (k == y ? 1.0 : 0.0)) * inv_n;
    }
  }
  out.ce = ce_ref + ce * inv_n;

  // Soft Dice over the included classes; dL/dp first, then chain through softmax.
  const std::size_t first_class = options.dice_include_background ? 0 : 1;
  const std::size_t included = K > first_class ? K - first_class : 0;
  std::vector<double> dldp(K * n, 0.0);
  double dice_mean = 0.0;
  for (std::size_t k = first_class; k < K; ++k) {
    double inter = 0.0, psum = 0.0, ysum = 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      const double pk = prob.data[k * n + p];
      const double yk = static_cast<std::size_t>(labels.data()[p]) == k ? 1.0 : 0.0;
      inter += pk * yk;
      psum += pk;
      ysum += yk;
    }
    const double num = 2.0 * inter + options.dice_eps;
    const double den = psum + ysum + options.dice_eps;
    dice_mean += num / den;
    for (std::size_t p = 0; p < n; ++p) {
      const double yk = static_cast<std::size_t>(labels.data()[p]) == k ? 1.0 : 0.0;
      dldp[k * n + p] = -(2.0 * yk * den - num) / (den * den) / static_cast<double>(included);
    }
  }
  out.dice = included > 0 ? 1.0 - dice_mean / static_cast<double>(included) : 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    double dot = 0.0;
    for (std::size_t k = 0; k < K; ++k) dot += prob.data[k * n + p] * dldp[k * n + p];
    for (std::size_t k = 0; k < K; ++k) {
      out.grad.data[k * n + p] += prob.data[k * n + p] * (dldp[k * n + p] - dot);
    }
  }
  out.value = out.ce + out.dice;
  return out;
}

KlResult kl_consistency(const LogitsMap& first, const LogitsMap& second) {
  if (!first.same_shape(second)) throw InvalidArgument("kl_consistency: logit maps differ in shape");
  const std::size_t K = first.classes;
  const std::size_t n = first.pixels();
  const LogitsMap lp = log_softmax(first);
  const LogitsMap lq = log_softmax(second);
  const LogitsMap p = softmax_probs(first);
  const LogitsMap q = softmax_probs(second);
  const double inv_n = 1.0 / static_cast<double>(n);

  KlResult out;
  out.grad_first = LogitsMap(K, first.height, first.width);
  out.grad_second = LogitsMap(K, first.height, first.width);
  std::vector<double> d(K), active_p(K), active_q(K);
  double total = 0.0;
  for (std::size_t px = 0; px < n; ++px) {
    double pd = 0.0, pa = 0.0, pqa = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double a = lp.data[k * n + px];
      const double b = lq.data[k * n + px];
      active_p[k] = a > kLogFloor ? 1.0 : 0.0;
      active_q[k] = b > kLogFloor ? 1.0 : 0.0;
      d[k] = std::max(a, kLogFloor) - std::max(b, kLogFloor);
      const double pk = p.data[k * n + px];
      total += pk * d[k];
      pd += pk * d[k];
      pa += pk * active_p[k];
      pqa += pk * active_q[k];
    }
    for (std::size_t m = 0; m < K; ++m) {
      const double pm = p.data[m * n + px];
      const double qm = q.data[m * n + px];
      out.grad_first.data[m * n + px] = (pm * (d[m] - pd) + pm * active_p[m] - pm * pa) * inv_n;
      out.grad_second.data[m * n + px] = (qm * pqa - pm * active_q[m]) * inv_n;
    }
  }
  out.value = total * inv_n;
  return out;
}

TotalLoss total_loss(const LogitsMap& logits1, const LogitsMap& logits2, const LabelMask& labels,
                     double lambda_div, const SegLossOptions& options) {
  if (!logits1.same_shape(logits2)) throw InvalidArgument("total_loss: logit maps differ in shape");
  auto s1 = seg_loss(logits1, labels, options);
  auto s2 = seg_loss(logits2, labels, options);
  auto kl = kl_consistency(logits1, logits2);

  TotalLoss out;
  out.report = {s1.value + s2.value + lambda_div * kl.value, s1.value, s2.value, kl.value, lambda_div};
  out.grad1 = std::move(s1.grad);
  out.grad2 = std::move(s2.grad);
  for (std::size_t i = 0; i < out.grad1.data.size(); ++i) {
    out.grad1.data[i] += lambda_div * kl.grad_first.data[i];
    out.grad2.data[i] += lambda_div * kl.grad_second.data[i];
  }
  if (!std::isfinite(out.report.total)) throw InvalidArgument("total_loss: non-finite loss");
  return out;
}

}  // namespace causaug
