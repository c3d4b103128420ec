#include "causaug/batch.hpp"

#include <algorithm>
#include <cstdio>

#include "causaug/error.hpp"
#include "causaug/npy.hpp"
#include "causaug/parallel.hpp"
#include "causaug/preprocess.hpp"

namespace causaug {

namespace fs = std::filesystem;
using nlohmann::json;

Augmenter::Augmenter(PipelineConfig config)
    : config_(std::move(config)), augment_(config_.augment_config()), hash_(causaug::config_hash(config_)) {
  config_.validate();
}

AugPair Augmenter::augment_slice(const ImageTensor& x, std::size_t input, std::size_t slice, std::size_t pair) const {
  const SeedStream stream = SeedStream(config_.seed).child("input", input).child("slice", slice).child("pair", pair);
  return augment_sample(x, augment_, stream);
}

std::vector<AugPair> Augmenter::augment_batch(std::span<const ImageTensor> images, std::uint64_t iteration,
                                              std::size_t threads) const {
  std::vector<AugPair> out(images.size());
  const SeedStream root = SeedStream(config_.seed).child("iteration", iteration);
  parallel_for(images.size(), threads,
               [&](std::size_t i) { out[i] = augment_sample(images[i], augment_, root.child("sample", i)); });
  return out;
}

std::string output_stem(const std::string& stem, std::size_t slice, std::size_t pair) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "_s%04zu_p%02zu", slice, pair);
  return stem + buf;
}

json provenance_record(const Augmenter& engine, const AugPair& pair, const std::string& input_name,
                       std::size_t slice, std::size_t pair_index, const std::vector<std::string>& outputs) {
  return {{"input", input_name},
          {"slice", slice},
          {"pair", pair_index},
          {"seed", engine.config().seed},
          {"seed_path", pair.seed_path},
          {"gin",
           json::array({{{"provenance", pair.gin1.provenance}, {"alpha", pair.gin1.alpha}},
                        {{"provenance", pair.gin2.provenance}, {"alpha", pair.gin2.alpha}}})},
          {"map", to_string(pair.map.origin)},
          {"resamples", pair.resamples},
          {"outputs", outputs},
          {"config", to_json(engine.config())},
          {"config_hash", engine.config_hash()}};
}

std::vector<fs::path> collect_inputs(const fs::path& input) {
  std::error_code ec;
  if (fs::is_directory(input, ec)) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(input, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".npy") files.push_back(entry.path());
    }
    if (ec) throw IoError(input.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());
    return files;
  }
  if (!fs::exists(input, ec)) throw IoError(input.string() + ": no such file or directory");
  return {input};
}

namespace {

std::vector<ImageTensor> load_slices(const fs::path& path, const AugmentJob& job, const PreprocSpec& spec) {
  const VolumeFile volume = to_volume(load_npy(path));
  if (job.preprocess) return preprocess(volume, spec);
  std::vector<ImageTensor> slices;
  slices.reserve(volume.depth);
  for (std::size_t d = 0; d < volume.depth; ++d) {
    const auto s = volume.slice(d);
    slices.emplace_back(1, volume.height, volume.width, std::vector<float>(s.begin(), s.end()));
  }
  return slices;
}

}  // namespace

AugmentSummary run_augment(const Augmenter& engine, const AugmentJob& job,
                           const std::function<void(const std::string&)>& log) {
  if (job.pairs == 0) throw InvalidArgument("augment: pairs must be >= 1");
  std::error_code ec;
  fs::create_directories(job.out_dir, ec);
  if (ec) throw IoError(job.out_dir.string() + ": " + ec.message());

  AugmentSummary summary;
  for (std::size_t input = 0; input < job.inputs.size(); ++input) {
    const fs::path& path = job.inputs[input];
    std::vector<ImageTensor> slices;
    try {
      slices = load_slices(path, job, engine.config().preprocess);
    } catch (const Error& e) {
      summary.failures.push_back(path.string() + ": " + e.what());
      continue;
    }
    const std::string stem = path.stem().string();
    const std::string name = path.filename().string();
    const std::size_t tasks = slices.size() * job.pairs;
    std::vector<std::string> errors(tasks);
    parallel_for(tasks, job.threads, [&](std::size_t task) {
      const std::size_t slice = task / job.pairs;
      const std::size_t p = task % job.pairs;
      try {
        const AugPair pair = engine.augment_slice(slices[slice], input, slice, p);
        const std::string base = output_stem(stem, slice, p);
        std::vector<std::string> outputs = {base + "_t1.npy", base + "_t2.npy"};
        if (job.save_maps) outputs.push_back(base + "_map.npy");
        save_npy(pair.t1, job.out_dir / outputs[0]);
        save_npy(pair.t2, job.out_dir / outputs[1]);
        if (job.save_maps) save_npy(pair.map.as_tensor(), job.out_dir / outputs[2]);
        const std::string sidecar = provenance_record(engine, pair, name, slice, p, outputs).dump(2) + "\n";
        write_file(job.out_dir / (base + ".json"),
                   std::span(reinterpret_cast<const std::uint8_t*>(sidecar.data()), sidecar.size()));
      } catch (const Error& e) {
        errors[task] = path.string() + " slice " + std::to_string(slice) + " pair " + std::to_string(p) + ": " +
                       e.what();
      }
    });
    std::size_t ok = 0;
    for (const auto& e : errors) {
      if (e.empty()) {
        ++ok;
      } else {
        summary.failures.push_back(e);
      }
    }
    summary.slices += slices.size();
    summary.pairs_written += ok;
    if (log) log(name + ": " + std::to_string(slices.size()) + " slices, " + std::to_string(ok) + " pairs");
  }
  return summary;
}

}  // namespace causaug
