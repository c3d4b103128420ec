#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "causaug/gin.hpp"
#include "causaug/objective.hpp"
#include "causaug/pcmap.hpp"
#include "causaug/segmenter.hpp"
#include "causaug/seed_stream.hpp"
#include "causaug/tensor.hpp"

namespace causaug {

enum class Domain { source, target };

/// Synthetic two-domain segmentation task on small canvases: one random
/// ellipse (the label) plus small distractor discs. Shapes are drawn the same
/// way in both domains; only the appearance differs.
///
/// Source: tissue intensities background / foreground / distractor plus
/// Gaussian acquisition noise. Target: distractors take the background
/// intensity, every intensity v becomes (1 - v)^gamma, and smoothed texture
/// noise is added. Both are z-normalized per image.
struct ToyTaskConfig {
  std::size_t height = 64;
  std::size_t width = 64;
  double axis_min = 6.0;  ///< ellipse semi-axes, pixels
  double axis_max = 14.0;
  double centre_margin = 16.0;  ///< ellipse centre uniform in [m, side - m]
  std::size_t distractors_min = 4;
  std::size_t distractors_max = 8;
  double distractor_radius_min = 2.0;
  double distractor_radius_max = 4.0;
  double distractor_margin = 4.0;
  double background = 0.2;
  double foreground = 0.55;
  double distractor = 0.55;
  double acquisition_noise = 0.03;
  double target_gamma = 2.2;
  double texture_noise = 0.05;
  std::size_t texture_smoothing = 1;  ///< passes of a 5x5 box filter

  void validate() const;
};

struct ToySample {
  ImageTensor image;  ///< 1 x H x W
  LabelMask label;    ///< 2 classes, 1 = ellipse interior
};

class SyntheticTask {
 public:
  explicit SyntheticTask(ToyTaskConfig config = {});

  const ToyTaskConfig& config() const noexcept { return config_; }

  /// 0 background, 1 foreground, 2 distractor. Uses stream / shape.
  std::vector<std::int32_t> tissue_map(const SeedStream& stream) const;

  /// Same stream in both domains gives the same shapes and label.
  /// Appearance draws come from stream / appearance.
  ToySample sample(Domain domain, const SeedStream& stream) const;

 private:
  ToyTaskConfig config_;
};

enum class AugMode { none, gin, gin_ipa };

std::string to_string(AugMode mode);
AugMode aug_mode_from_string(const std::string& name);

/// Plain SGD with a learning rate decaying linearly to 0.
struct TrainConfig {
  std::size_t iterations = 3000;
  double learning_rate = 0.05;
  double lambda_div = 1.0;
  AugMode mode = AugMode::gin_ipa;
  std::uint64_t seed = 1;
  GinConfig gin;
  BsplineLatticeConfig bspline;
  /// Multiplies the ERM loss (mode none only).
  double erm_loss_scale = 1.0;
  /// Replaces the sampled GIN alpha. Test hook.
  std::optional<double> alpha_override;

  void validate() const;
  /// lr0 * (1 - t / N).
  double learning_rate_at(std::size_t t) const;
};

struct TrainResult {
  TinySegmenter<float> model;
  std::vector<LossReport> trace;
};

using IterationCallback = std::function<void(std::size_t iteration, const LossReport&)>;

/// Per iteration t: draw a source sample from seed / data:t; in mode none
/// take an SGD step on the segmentation loss of the raw image; otherwise draw
/// an augmented pair from seed / augment:t and step on the full consistency
/// loss of both views. Throws DivergenceError on non-finite logits or loss.
TrainResult train(const SyntheticTask& task, const SegmenterConfig& net, const TrainConfig& config,
                  const IterationCallback& on_iteration = {});

/// Argmax per pixel (first class wins ties).
LabelMask predict(const TinySegmenter<float>& model, const ImageTensor& image);

/// 100 * 2|P & T| / (|P| + |T|) for one class; both empty gives 100.
double dice_score(const LabelMask& pred, const LabelMask& truth, std::int32_t cls);

struct ModeResult {
  AugMode mode = AugMode::none;
  double source_dice = 0.0;
  double target_dice = 0.0;
  double final_loss = 0.0;

  friend bool operator==(const ModeResult&, const ModeResult&) = default;
};

struct GeneralizationReport {
  std::vector<ModeResult> modes;
  std::size_t eval_images = 0;
  std::uint64_t seed = 0;
  std::size_t iterations = 0;

  const ModeResult& at(AugMode mode) const;
  friend bool operator==(const GeneralizationReport&, const GeneralizationReport&) = default;
};

struct EvalConfig {
  ToyTaskConfig task;
  SegmenterConfig net;
  TrainConfig train;  ///< mode is overridden per entry of `modes`
  std::vector<AugMode> modes = {AugMode::none, AugMode::gin, AugMode::gin_ipa};
  std::size_t eval_images = 100;
  std::uint64_t source_eval_seed = 999;
  std::uint64_t target_eval_seed = 998;
  /// Modes train concurrently on up to this many threads.
  std::size_t threads = 1;
};

/// Mean foreground Dice on held-out source and target sets.
ModeResult evaluate_model(const SyntheticTask& task, const TinySegmenter<float>& model, const EvalConfig& config);

using ModeIterationCallback = std::function<void(AugMode mode, std::size_t iteration, const LossReport&)>;

/// Trains one model per mode and evaluates each. Results do not depend on
/// `threads`. With several threads the callback is invoked concurrently.
GeneralizationReport evaluate_generalization(const EvalConfig& config,
                                             const ModeIterationCallback& on_iteration = {});

nlohmann::json to_json(const LossReport& report);
nlohmann::json to_json(const GeneralizationReport& report);
GeneralizationReport report_from_json(const nlohmann::json& j);

}  // namespace causaug
