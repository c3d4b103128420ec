#include "causaug/toy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "causaug/error.hpp"
#include "causaug/ipa.hpp"
#include "causaug/kernels.hpp"
#include "causaug/parallel.hpp"

namespace causaug {

void ToyTaskConfig::validate() const {
  if (height < 8 || width < 8) throw InvalidArgument("ToyTaskConfig: canvas must be at least 8 x 8");
  if (!(axis_min > 0.0 && axis_min <= axis_max)) throw InvalidArgument("ToyTaskConfig: bad ellipse axis range");
  if (distractors_min > distractors_max) throw InvalidArgument("ToyTaskConfig: bad distractor count range");
  if (!(distractor_radius_min >= 0.0 && distractor_radius_min <= distractor_radius_max)) {
    throw InvalidArgument("ToyTaskConfig: bad distractor radius range");
  }
  const double side = static_cast<double>(std::min(height, width));
  if (!(2.0 * centre_margin <= side && 2.0 * distractor_margin <= side)) {
    throw InvalidArgument("ToyTaskConfig: margins exceed the canvas");
  }
  if (!(target_gamma > 0.0) || acquisition_noise < 0.0 || texture_noise < 0.0) {
    throw InvalidArgument("ToyTaskConfig: bad appearance parameters");
  }
}

SyntheticTask::SyntheticTask(ToyTaskConfig config) : config_(config) { config_.validate(); }

std::vector<std::int32_t> SyntheticTask::tissue_map(const SeedStream& stream) const {
  const auto& c = config_;
  auto s = stream.child("shape");
  const double cy = s.uniform(c.centre_margin, static_cast<double>(c.height) - c.centre_margin);
  const double cx = s.uniform(c.centre_margin, static_cast<double>(c.width) - c.centre_margin);
  const double a = s.uniform(c.axis_min, c.axis_max);
  const double b = s.uniform(c.axis_min, c.axis_max);
  const double theta = std::numbers::pi * s.uniform();
  const double ct = std::cos(theta);
  const double st = std::sin(theta);

  std::vector<std::int32_t> tissue(c.height * c.width, 0);
  const std::size_t count = c.distractors_min + s.below(c.distractors_max - c.distractors_min + 1);
  for (std::size_t d = 0; d < count; ++d) {
    const double r = s.uniform(c.distractor_radius_min, c.distractor_radius_max);
    const double py = s.uniform(c.distractor_margin, static_cast<double>(c.height) - c.distractor_margin);
    const double px = s.uniform(c.distractor_margin, static_cast<double>(c.width) - c.distractor_margin);
    for (std::size_t y = 0; y < c.height; ++y) {
      for (std::size_t x = 0; x < c.width; ++x) {
        const double dy = static_cast<double>(y) - py;
        const double dx = static_cast<double>(x) - px;
        if (dy * dy + dx * dx <= r * r) tissue[y * c.width + x] = 2;
      }
    }
  }
  for (std::size_t y = 0; y < c.height; ++y) {
    for (std::size_t x = 0; x < c.width; ++x) {
      const double dy = static_cast<double>(y) - cy;
      const double dx = static_cast<double>(x) - cx;
      const double u = (dx * ct + dy * st) / a;
      const double v = (-dx * st + dy * ct) / b;
      if (u * u + v * v <= 1.0) tissue[y * c.width + x] = 1;
    }
  }
  return tissue;
}

ToySample SyntheticTask::sample(Domain domain, const SeedStream& stream) const {
  const auto& c = config_;
  const std::vector<std::int32_t> tissue = tissue_map(stream);
  const std::size_t n = tissue.size();
  auto s = stream.child("appearance");

  std::vector<std::int32_t> label(n);
  for (std::size_t p = 0; p < n; ++p) label[p] = tissue[p] == 1 ? 1 : 0;

  std::vector<double> x(n);
  if (domain == Domain::source) {
    const double lut[3] = {c.background, c.foreground, c.distractor};
    for (std::size_t p = 0; p < n; ++p) x[p] = lut[tissue[p]] + c.acquisition_noise * s.gaussian();
  } else {
    const double lut[3] = {c.background, c.foreground, c.background};
    for (std::size_t p = 0; p < n; ++p) x[p] = std::pow(1.0 - std::clamp(lut[tissue[p]], 0.0, 1.0), c.target_gamma);
    ImageTensor texture(1, c.height, c.width, draw_gaussian(s, n));
    const ConvKernel box(1, 1, 5, 1.0f / 25.0f);
    for (std::size_t k = 0; k < c.texture_smoothing; ++k) texture = conv2d(texture, box);
    double mean = 0.0;
    for (float v : texture.data()) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (float v : texture.data()) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    const double scale = sd > 0.0 ? c.texture_noise / sd : 0.0;
    for (std::size_t p = 0; p < n; ++p) x[p] += scale * texture.data()[p] + c.acquisition_noise * s.gaussian();
  }

  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (!(sd > 0.0)) throw InvalidArgument("SyntheticTask: constant image");
  std::vector<float> img(n);
  for (std::size_t p = 0; p < n; ++p) img[p] = static_cast<float>((x[p] - mean) / sd);
  return {ImageTensor(1, c.height, c.width, std::move(img)), LabelMask(2, c.height, c.width, std::move(label))};
}

std::string to_string(AugMode mode) {
  switch (mode) {
    case AugMode::none: return "none";
    case AugMode::gin: return "gin";
    case AugMode::gin_ipa: return "gin+ipa";
  }
  return "unknown";
}

AugMode aug_mode_from_string(const std::string& name) {
  if (name == "none") return AugMode::none;
  if (name == "gin") return AugMode::gin;
  if (name == "gin+ipa") return AugMode::gin_ipa;
  throw InvalidArgument("unknown augmentation mode '" + name + "' (expected none, gin or gin+ipa)");
}

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw InvalidArgument("TrainConfig: learning rate must be >= 0");
  if (!(lambda_div >= 0.0)) throw InvalidArgument("TrainConfig: lambda_div must be >= 0");
  if (alpha_override && !(*alpha_override >= 0.0 && *alpha_override <= 1.0)) {
    throw InvalidArgument("TrainConfig: alpha override outside [0, 1]");
  }
  gin.validate();
}

double TrainConfig::learning_rate_at(std::size_t t) const {
  if (iterations == 0) return 0.0;
  return learning_rate * (1.0 - static_cast<double>(t) / static_cast<double>(iterations));
}

namespace {

std::vector<float> to_vector(const ImageTensor& x) { return {x.data().begin(), x.data().end()}; }

LogitsMap to_logits(const std::vector<float>& raw, std::size_t classes, std::size_t h, std::size_t w,
                    std::size_t iteration) {
  LogitsMap out(classes, h, w);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    if (!std::isfinite(raw[k])) throw DivergenceError("training diverged: non-finite logits", iteration);
    out.data[k] = raw[k];
  }
  return out;
}

std::vector<float> to_float(const LogitsMap& g, double scale = 1.0) {
  std::vector<float> out(g.data.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<float>(scale * g.data[k]);
  return out;
}

}  // namespace

TrainResult train(const SyntheticTask& task, const SegmenterConfig& net, const TrainConfig& config,
                  const IterationCallback& on_iteration) {
  config.validate();
  const SeedStream root(config.seed);
  auto init = root.child("init");
  TrainResult result{TinySegmenter<float>(net, init), {}};
  auto& model = result.model;
  const std::size_t h = task.config().height;
  const std::size_t w = task.config().width;
  const std::size_t classes = net.classes;

  AugmentConfig aug;
  aug.gin = config.gin;
  aug.map_kind = MapKind::bspline;
  aug.bspline = config.bspline;
  aug.ipa_enabled = config.mode == AugMode::gin_ipa;
  aug.alpha_override = config.alpha_override;

  result.trace.reserve(config.iterations);
  for (std::size_t t = 0; t < config.iterations; ++t) {
    const ToySample s = task.sample(Domain::source, root.child("data", t));
    LossReport report;
    TinySegmenter<float>::Gradients grads;
    if (config.mode == AugMode::none) {
      TinySegmenter<float>::Cache cache;
      const auto logits = to_logits(model.forward(to_vector(s.image), h, w, &cache), classes, h, w, t);
      const SegLoss seg = seg_loss(logits, s.label);
      report = {config.erm_loss_scale * seg.value, seg.value, 0.0, 0.0, config.lambda_div};
      grads = model.backward(cache, to_float(seg.grad, config.erm_loss_scale));
    } else {
      const AugPair pair = augment_sample(s.image, aug, root.child("augment", t));
      TinySegmenter<float>::Cache c1, c2;
      const auto l1 = to_logits(model.forward(to_vector(pair.t1), h, w, &c1), classes, h, w, t);
      const auto l2 = to_logits(model.forward(to_vector(pair.t2), h, w, &c2), classes, h, w, t);
      const TotalLoss loss = total_loss(l1, l2, s.label, config.lambda_div);
      report = loss.report;
      grads = model.backward(c1, to_float(loss.grad1));
      TinySegmenter<float>::accumulate(grads, model.backward(c2, to_float(loss.grad2)));
    }
    if (!std::isfinite(report.total)) throw DivergenceError("training diverged: non-finite loss", t);
    model.sgd_step(grads, config.learning_rate_at(t));
    result.trace.push_back(report);
    if (on_iteration) on_iteration(t, report);
  }
  return result;
}

LabelMask predict(const TinySegmenter<float>& model, const ImageTensor& image) {
  const std::size_t h = image.height();
  const std::size_t w = image.width();
  const std::size_t n = h * w;
  const std::size_t classes = model.config().classes;
  const auto logits = model.forward(to_vector(image), h, w);
  LabelMask out(classes, h, w);
  for (std::size_t p = 0; p < n; ++p) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < classes; ++k) {
      if (logits[k * n + p] > logits[best * n + p]) best = k;
    }
    out.data()[p] = static_cast<std::int32_t>(best);
  }
  return out;
}

double dice_score(const LabelMask& pred, const LabelMask& truth, std::int32_t cls) {
  if (pred.height() != truth.height() || pred.width() != truth.width()) {
    throw InvalidArgument("dice_score: masks differ in shape");
  }
  std::size_t p_count = 0, t_count = 0, both = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const bool a = pred.data()[k] == cls;
    const bool b = truth.data()[k] == cls;
    p_count += a;
    t_count += b;
    both += a && b;
  }
  if (p_count + t_count == 0) return 100.0;
  return 200.0 * static_cast<double>(both) / static_cast<double>(p_count + t_count);
}

const ModeResult& GeneralizationReport::at(AugMode mode) const {
  for (const auto& m : modes) {
    if (m.mode == mode) return m;
  }
  throw InvalidArgument("GeneralizationReport: no result for mode " + to_string(mode));
}

ModeResult evaluate_model(const SyntheticTask& task, const TinySegmenter<float>& model, const EvalConfig& config) {
  if (config.eval_images == 0) throw InvalidArgument("evaluate_model: eval_images must be >= 1");
  auto mean_dice = [&](Domain domain, std::uint64_t seed) {
    const SeedStream root(seed);
    double sum = 0.0;
    for (std::size_t i = 0; i < config.eval_images; ++i) {
      const ToySample s = task.sample(domain, root.child("eval", i));
      sum += dice_score(predict(model, s.image), s.label, 1);
    }
    return sum / static_cast<double>(config.eval_images);
  };
  ModeResult r;
  r.source_dice = mean_dice(Domain::source, config.source_eval_seed);
  r.target_dice = mean_dice(Domain::target, config.target_eval_seed);
  return r;
}

GeneralizationReport evaluate_generalization(const EvalConfig& config, const ModeIterationCallback& on_iteration) {
  const SyntheticTask task(config.task);
  GeneralizationReport report;
  report.eval_images = config.eval_images;
  report.seed = config.train.seed;
  report.iterations = config.train.iterations;
  report.modes.resize(config.modes.size());
  parallel_for(config.modes.size(), config.threads, [&](std::size_t i) {
    TrainConfig tc = config.train;
    tc.mode = config.modes[i];
    IterationCallback hook;
    if (on_iteration) hook = [&](std::size_t t, const LossReport& r) { on_iteration(tc.mode, t, r); };
    const TrainResult trained = train(task, config.net, tc, hook);
    ModeResult r = evaluate_model(task, trained.model, config);
    r.mode = tc.mode;
    r.final_loss = trained.trace.empty() ? 0.0 : trained.trace.back().total;
    report.modes[i] = r;
  });
  return report;
}

nlohmann::json to_json(const LossReport& r) {
  return {{"total", r.total}, {"seg1", r.seg1}, {"seg2", r.seg2}, {"kl", r.kl}, {"lambda_div", r.lambda_div}};
}

nlohmann::json to_json(const GeneralizationReport& report) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& m : report.modes) {
    modes.push_back({{"mode", to_string(m.mode)},
                     {"source_dice", m.source_dice},
                     {"target_dice", m.target_dice},
                     {"final_loss", m.final_loss}});
  }
  return {{"modes", modes},
          {"eval_images", report.eval_images},
          {"seed", report.seed},
          {"iterations", report.iterations}};
}

GeneralizationReport report_from_json(const nlohmann::json& j) {
  try {
    GeneralizationReport r;
    r.eval_images = j.at("eval_images").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.iterations = j.at("iterations").get<std::size_t>();
    for (const auto& m : j.at("modes")) {
      r.modes.push_back({aug_mode_from_string(m.at("mode").get<std::string>()), m.at("source_dice").get<double>(),
                         m.at("target_dice").get<double>(), m.at("final_loss").get<double>()});
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("report JSON: ") + e.what());
  }
}

}  // namespace causaug
