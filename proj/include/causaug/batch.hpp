#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "causaug/config.hpp"
#include "causaug/ipa.hpp"
#include "causaug/tensor.hpp"

namespace causaug {

/// Config-bound augmentation engine shared by the CLI and external bindings.
class Augmenter {
 public:
  explicit Augmenter(PipelineConfig config);

  const PipelineConfig& config() const noexcept { return config_; }
  const std::string& config_hash() const noexcept { return hash_; }

  /// Pair `pair` of slice `slice` of input file `input`, drawn from
  /// seed / input:i / slice:s / pair:p.
  AugPair augment_slice(const ImageTensor& x, std::size_t input, std::size_t slice, std::size_t pair) const;

  /// One pair per image from seed / iteration:t / sample:i.
  std::vector<AugPair> augment_batch(std::span<const ImageTensor> images, std::uint64_t iteration,
                                     std::size_t threads = 1) const;

 private:
  PipelineConfig config_;
  AugmentConfig augment_;
  std::string hash_;
};

/// "<stem>_sNNNN_pNN".
std::string output_stem(const std::string& stem, std::size_t slice, std::size_t pair);

/// Provenance record written next to every output pair. Contains no
/// timestamps or absolute paths, so reruns are byte-identical.
nlohmann::json provenance_record(const Augmenter& engine, const AugPair& pair, const std::string& input_name,
                                 std::size_t slice, std::size_t pair_index,
                                 const std::vector<std::string>& outputs);

struct AugmentJob {
  /// Files, in the order that defines their input index.
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out_dir;
  std::size_t pairs = 1;
  std::size_t threads = 1;
  bool save_maps = false;
  /// Apply the config's intensity preprocessing to each file first.
  bool preprocess = false;
};

struct AugmentSummary {
  std::size_t slices = 0;
  std::size_t pairs_written = 0;
  /// One "path: message" entry per input that could not be processed.
  std::vector<std::string> failures;
};

/// Expands a file or directory argument into the sorted list of .npy files.
std::vector<std::filesystem::path> collect_inputs(const std::filesystem::path& input);

/// 2-D arrays are one slice; 3-D arrays are D slices of 1 x H x W. Failures
/// on one input are recorded and the remaining inputs are still processed.
AugmentSummary run_augment(const Augmenter& engine, const AugmentJob& job,
                           const std::function<void(const std::string&)>& log = {});

}  // namespace causaug
