// causaug command-line interface.
//
// Exit codes: 0 success, 1 runtime error, 2 usage error.

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "causaug/batch.hpp"
#include "causaug/config.hpp"
#include "causaug/error.hpp"
#include "causaug/npy.hpp"
#include "causaug/parallel.hpp"
#include "causaug/pcmap.hpp"
#include "causaug/png.hpp"
#include "causaug/preprocess.hpp"
#include "causaug/toy.hpp"

namespace {

using namespace causaug;
namespace fs = std::filesystem;
using nlohmann::json;

// Images per second, roughly a quarter of the rate measured on the reference
// machine (1 core) for a 64 x 192 x 192 batch with the default config.
constexpr double kBenchFloor = 40.0;

struct Size2 {
  std::size_t h = 0;
  std::size_t w = 0;
};

const std::regex& size_pattern() {
  static const std::regex re(R"(([1-9]\d{0,5})[xX]([1-9]\d{0,5}))");
  return re;
}

const CLI::Validator kSizeCheck(
    [](std::string& text) {
      return std::regex_match(text, size_pattern()) ? std::string() : "expected HxW, got '" + text + "'";
    },
    "HxW");

Size2 parse_size(const std::string& text) {
  std::smatch m;
  std::regex_match(text, m, size_pattern());
  return {std::stoul(m[1]), std::stoul(m[2])};
}

PipelineConfig load_pipeline(const std::string& path, std::optional<std::uint64_t> seed) {
  PipelineConfig config = path.empty() ? PipelineConfig{} : load_config(path);
  if (seed) config.seed = *seed;
  return config;
}

ImageTensor load_slice(const std::string& path, std::size_t slice, const PipelineConfig& config, bool prep) {
  const VolumeFile volume = to_volume(load_npy(path));
  if (slice >= volume.depth) {
    throw InvalidArgument(path + ": slice " + std::to_string(slice) + " out of range (depth " +
                          std::to_string(volume.depth) + ")");
  }
  if (prep) return preprocess(volume, config.preprocess)[slice];
  const auto s = volume.slice(slice);
  return ImageTensor(1, volume.height, volume.width, std::vector<float>(s.begin(), s.end()));
}

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "Pipeline config JSON")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causality-inspired single-source augmentation: GIN + IPA"};
  app.require_subcommand(1);
  app.fallthrough();
  std::optional<std::size_t> threads_flag;
  app.add_option("--threads", threads_flag, "Worker threads (default: CAUSAUG_THREADS or hardware)")
      ->check(CLI::PositiveNumber);

  // augment
  Common aug_c;
  std::string aug_input, aug_out;
  std::size_t aug_pairs = 1;
  bool aug_maps = false, aug_prep = false;
  auto* augment = app.add_subcommand("augment", "Write augmented NPY pairs plus provenance sidecars");
  augment->add_option("--input", aug_input, "NPY file or directory of NPY files")->required();
  augment->add_option("--out", aug_out, "Output directory")->required();
  augment->add_option("--pairs", aug_pairs, "Pairs per slice")->check(CLI::PositiveNumber);
  augment->add_flag("--save-maps", aug_maps, "Also write the blending maps");
  augment->add_flag("--preprocess", aug_prep, "Apply the config's intensity preprocessing first");
  add_common(augment, aug_c);

  // preview
  Common pv_c;
  std::string pv_input, pv_out;
  std::size_t pv_slice = 0;
  bool pv_prep = false;
  auto* preview = app.add_subcommand("preview", "PNG of slice, T1, T2 and the blending map side by side");
  preview->add_option("--input", pv_input, "NPY slice or volume")->required();
  preview->add_option("--out", pv_out, "Output PNG")->required();
  preview->add_option("--slice", pv_slice, "Slice index within a volume");
  preview->add_flag("--preprocess", pv_prep, "Apply the config's intensity preprocessing first");
  add_common(preview, pv_c);

  // gen-maps
  Common gm_c;
  std::string gm_kind, gm_size = "192x192", gm_input, gm_out;
  std::size_t gm_count = 1;
  std::optional<std::size_t> gm_spacing;
  bool gm_png = false;
  auto* gen_maps = app.add_subcommand("gen-maps", "Write random blending maps as NPY");
  gen_maps->add_option("--kind", gm_kind, "bspline or superpixel (default: config map_kind)")
      ->check(CLI::IsMember({"bspline", "superpixel"}));
  gen_maps->add_option("--size", gm_size, "HxW for bspline maps")->check(kSizeCheck);
  gen_maps->add_option("--input", gm_input, "Guide image for superpixel maps");
  gen_maps->add_option("--count", gm_count, "Number of maps")->check(CLI::PositiveNumber);
  gen_maps->add_option("--spacing", gm_spacing, "Control point spacing (bspline)")->check(CLI::PositiveNumber);
  gen_maps->add_option("--out", gm_out, "Output directory")->required();
  gen_maps->add_flag("--png", gm_png, "Also write PNG previews");
  add_common(gen_maps, gm_c);

  // bench
  Common bn_c;
  std::string bn_size = "192x192";
  std::size_t bn_batch = 64, bn_repeats = 3;
  double bn_floor = kBenchFloor;
  auto* bench = app.add_subcommand("bench", "Augmentation throughput in images per second");
  bench->add_option("--size", bn_size, "HxW")->check(kSizeCheck);
  bench->add_option("--batch", bn_batch, "Slices per batch (two images each)")->check(CLI::PositiveNumber);
  bench->add_option("--repeats", bn_repeats, "Timed batches; the fastest counts")->check(CLI::PositiveNumber);
  bench->add_option("--floor", bn_floor, "Minimum images per second");
  add_common(bench, bn_c);

  // toy-demo
  std::string td_mode = "all", td_out;
  std::uint64_t td_seed = 1;
  std::size_t td_iters = 3000, td_eval = 100, td_every = 1;
  auto* toy = app.add_subcommand("toy-demo", "Train and compare none / gin / gin+ipa on the synthetic task");
  toy->add_option("--mode", td_mode, "none, gin, gin+ipa or all")
      ->check(CLI::IsMember({"none", "gin", "gin+ipa", "all"}));
  toy->add_option("--seed", td_seed, "Training seed");
  toy->add_option("--iters", td_iters, "SGD iterations per mode");
  toy->add_option("--eval-images", td_eval, "Held-out images per domain")->check(CLI::PositiveNumber);
  toy->add_option("--log-every", td_every, "Emit every n-th iteration's losses (0: none)");
  toy->add_option("--out", td_out, "Final report JSON");

  // preprocess
  Common pp_c;
  std::string pp_input, pp_out;
  auto* prep = app.add_subcommand("preprocess", "Window, clip, normalize and resize a scan");
  prep->add_option("--input", pp_input, "NPY volume (D x H x W) or slice")->required();
  prep->add_option("--out", pp_out, "Output NPY (D x H x W)")->required();
  add_common(prep, pp_c);

  // verify
  std::vector<std::string> vf_files;
  auto* verify = app.add_subcommand("verify", "Check sidecar config hashes");
  verify->add_option("sidecars", vf_files, "Sidecar JSON files")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto selected = app.get_subcommands();
    std::cerr << (selected.empty() ? app.help() : selected.front()->help());
    return 2;
  }

  const std::size_t threads = threads_flag ? *threads_flag : default_thread_count();

  try {
    if (*augment) {
      const Augmenter engine(load_pipeline(aug_c.config, aug_c.seed));
      AugmentJob job;
      job.inputs = collect_inputs(aug_input);
      job.out_dir = aug_out;
      job.pairs = aug_pairs;
      job.threads = threads;
      job.save_maps = aug_maps;
      job.preprocess = aug_prep;
      if (job.inputs.empty()) throw IoError(aug_input + ": no .npy files found");
      const auto summary = run_augment(engine, job, [](const std::string& line) { std::cerr << line << "\n"; });
      for (const auto& f : summary.failures) std::cerr << "error: " << f << "\n";
      std::cout << json{{"inputs", job.inputs.size()},
                        {"slices", summary.slices},
                        {"pairs", summary.pairs_written},
                        {"failures", summary.failures.size()},
                        {"config_hash", engine.config_hash()}}
                       .dump()
                << "\n";
      return summary.failures.empty() ? 0 : 1;
    }

    if (*preview) {
      const Augmenter engine(load_pipeline(pv_c.config, pv_c.seed));
      const ImageTensor x = load_slice(pv_input, pv_slice, engine.config(), pv_prep);
      const AugPair pair = engine.augment_slice(x, 0, pv_slice, 0);
      const std::vector<ImageTensor> tiles = {x, pair.t1, pair.t2, pair.map.as_tensor()};
      save_png_preview(std::span<const ImageTensor>(tiles), pv_out);
      return 0;
    }

    if (*gen_maps) {
      const PipelineConfig config = load_pipeline(gm_c.config, gm_c.seed);
      const MapKind kind = gm_kind.empty() ? config.map_kind : map_kind_from_string(gm_kind);
      BsplineLatticeConfig lattice = config.bspline;
      if (gm_spacing) lattice.spacing = *gm_spacing;
      std::optional<ImageTensor> guide;
      Size2 size = parse_size(gm_size);
      if (kind == MapKind::superpixel) {
        if (gm_input.empty()) throw InvalidArgument("gen-maps: --kind superpixel needs --input");
        guide = load_slice(gm_input, 0, config, false);
        size = {guide->height(), guide->width()};
      }
      fs::create_directories(gm_out);
      const SeedStream root(config.seed);
      parallel_for(gm_count, threads, [&](std::size_t i) {
        SeedStream stream = root.child("map", i);
        const PseudoCorrMap map = kind == MapKind::bspline ? bspline_map(size.h, size.w, lattice, stream)
                                                           : superpixel_map(*guide, config.felz, stream);
        char name[32];
        std::snprintf(name, sizeof name, "map_%04zu", i);
        save_npy(map.as_tensor(), fs::path(gm_out) / (std::string(name) + ".npy"));
        if (gm_png) save_png_preview(map.as_tensor(), fs::path(gm_out) / (std::string(name) + ".png"));
      });
      return 0;
    }

    if (*bench) {
      const Augmenter engine(load_pipeline(bn_c.config, bn_c.seed));
      const Size2 size = parse_size(bn_size);
      std::vector<ImageTensor> batch;
      batch.reserve(bn_batch);
      const SeedStream root(engine.config().seed);
      for (std::size_t i = 0; i < bn_batch; ++i) {
        SeedStream s = root.child("bench-input", i);
        batch.emplace_back(1, size.h, size.w, draw_gaussian(s, size.h * size.w));
      }
      double best = 0.0;
      for (std::size_t r = 0; r < bn_repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto pairs = engine.augment_batch(batch, r, threads);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        best = std::max(best, 2.0 * static_cast<double>(pairs.size()) / secs);
      }
      const bool ok = best >= bn_floor;
      std::cout << json{{"size", bn_size},
                        {"batch", bn_batch},
                        {"threads", threads},
                        {"images_per_sec", best},
                        {"floor", bn_floor},
                        {"pass", ok}}
                       .dump()
                << "\n";
      if (!ok) std::cerr << "error: throughput below the regression floor\n";
      return ok ? 0 : 1;
    }

    if (*toy) {
      EvalConfig ec;
      ec.train.seed = td_seed;
      ec.train.iterations = td_iters;
      ec.eval_images = td_eval;
      ec.threads = threads;
      if (td_mode != "all") ec.modes = {aug_mode_from_string(td_mode)};
      // Buffered per mode so stdout does not depend on thread scheduling.
      std::vector<std::vector<std::string>> lines(ec.modes.size());
      std::mutex mu;
      const auto report = evaluate_generalization(ec, [&](AugMode mode, std::size_t t, const LossReport& r) {
        if (td_every == 0 || t % td_every != 0) return;
        const std::size_t slot =
            static_cast<std::size_t>(std::find(ec.modes.begin(), ec.modes.end(), mode) - ec.modes.begin());
        std::string line = json{{"mode", to_string(mode)}, {"iteration", t}, {"loss", to_json(r)}}.dump();
        const std::lock_guard lock(mu);
        lines[slot].push_back(std::move(line));
      });
      for (const auto& mode_lines : lines) {
        for (const auto& l : mode_lines) std::cout << l << "\n";
      }
      const json j = to_json(report);
      std::cout << j.dump() << "\n";
      if (!td_out.empty()) write_text(td_out, j.dump(2) + "\n");
      return 0;
    }

    if (*prep) {
      const PipelineConfig config = load_pipeline(pp_c.config, pp_c.seed);
      const auto slices = preprocess(to_volume(load_npy(pp_input)), config.preprocess);
      VolumeFile out;
      out.depth = slices.size();
      out.height = config.preprocess.target_h;
      out.width = config.preprocess.target_w;
      out.data.reserve(out.depth * out.height * out.width);
      for (const auto& s : slices) out.data.insert(out.data.end(), s.data().begin(), s.data().end());
      save_npy(out, pp_out);
      return 0;
    }

    if (*verify) {
      bool all_ok = true;
      for (const auto& f : vf_files) {
        const auto bytes = read_file(f);
        bool ok = false;
        try {
          ok = verify_sidecar(json::parse(bytes.begin(), bytes.end()));
        } catch (const json::exception&) {
        }
        std::cout << f << ": " << (ok ? "ok" : "MISMATCH") << "\n";
        all_ok = all_ok && ok;
      }
      return all_ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
