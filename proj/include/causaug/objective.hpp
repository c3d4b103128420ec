#pragma once

#include <cstddef>
#include <vector>

#include "causaug/tensor.hpp"

namespace causaug {

/// Raw per-class scores, K x H x W, in double precision.
struct LogitsMap {
  std::size_t classes = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  LogitsMap() = default;
  LogitsMap(std::size_t k, std::size_t h, std::size_t w, double fill = 0.0)
      : classes(k), height(h), width(w), data(k * h * w, fill) {}

  std::size_t pixels() const noexcept { return height * width; }
  double& at(std::size_t k, std::size_t y, std::size_t x) noexcept { return data[(k * height + y) * width + x]; }
  double at(std::size_t k, std::size_t y, std::size_t x) const noexcept {
    return data[(k * height + y) * width + x];
  }
  bool same_shape(const LogitsMap& o) const noexcept {
    return classes == o.classes && height == o.height && width == o.width;
  }
};

/// Probabilities are clamped to [kProbFloor, 1] before taking logs.
inline constexpr double kProbFloor = 1e-8;

/// Per-pixel softmax with max subtraction; same layout as the logits.
LogitsMap softmax_probs(const LogitsMap& logits);

struct SegLossOptions {
  /// Soft Dice smoothing term added to numerator and denominator.
  double dice_eps = 1.0;
  bool dice_include_background = true;
};

struct SegLoss {
  double value = 0.0;  ///< ce + dice
  double ce = 0.0;
  double dice = 0.0;
  LogitsMap grad;
};

/// Mean pixel cross-entropy plus soft Dice loss
///   1 - mean_k (2 sum p y + eps) / (sum p + sum y + eps),
/// with the analytic gradient with respect to the logits.
SegLoss seg_loss(const LogitsMap& logits, const LabelMask& labels, const SegLossOptions& options = {});

struct KlResult {
  double value = 0.0;
  LogitsMap grad_first;
  LogitsMap grad_second;
};

/// Pixel-mean KL(softmax(first) || softmax(second)) with clamped logs,
/// and gradients with respect to both logit maps.
KlResult kl_consistency(const LogitsMap& first, const LogitsMap& second);

struct LossReport {
  double total = 0.0;
  double seg1 = 0.0;
  double seg2 = 0.0;
  double kl = 0.0;
  double lambda_div = 10.0;
};

struct TotalLoss {
  LossReport report;
  LogitsMap grad1;
  LogitsMap grad2;
};

inline constexpr double kDefaultLambdaDiv = 10.0;

/// seg(view1) + seg(view2) + lambda_div * KL(view1 || view2).
TotalLoss total_loss(const LogitsMap& logits1, const LogitsMap& logits2, const LabelMask& labels,
                     double lambda_div = kDefaultLambdaDiv, const SegLossOptions& options = {});

}  // namespace causaug
