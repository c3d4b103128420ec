#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "causaug/conventional.hpp"
#include "causaug/gin.hpp"
#include "causaug/ipa.hpp"
#include "causaug/preprocess.hpp"

namespace causaug {

/// Everything a batch augmentation run depends on.
///
/// JSON layout (every key optional, unknown keys rejected):
///   {
///     "preprocess": {"window": [lo, hi] | null, "clip_top_percent": 0.005,
///                    "normalize": true, "target_size": [192, 192],
///                    "augment": { ConventionalAugConfig fields }},
///     "gin": {"n_layers": 4, "hidden_channels": 2, "kernel_size": 3, "leaky_slope": 0.2},
///     "map": {"map_kind": "bspline" | "superpixel", "spacing": null | n,
///             "felz": {"k": 100, "min_size": 50, "sigma": 0.8}},
///     "ipa_enabled": true,
///     "max_resamples": 8,
///     "seed": 0
///   }
struct PipelineConfig {
  PreprocSpec preprocess;
  ConventionalAugConfig conventional;
  GinConfig gin;
  MapKind map_kind = MapKind::bspline;
  BsplineLatticeConfig bspline;
  FelzConfig felz;
  bool ipa_enabled = true;
  std::size_t max_resamples = 8;
  std::uint64_t seed = 0;

  /// Validates every nested config.
  void validate() const;
  AugmentConfig augment_config() const;
};

/// Throws InvalidArgument naming the offending key on unknown keys, wrong
/// types or invalid values.
PipelineConfig config_from_json(const nlohmann::json& j);
PipelineConfig parse_config(const std::string& text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Fully populated form (defaults included).
nlohmann::json to_json(const PipelineConfig& config);

/// Sorted keys, no whitespace.
std::string canonical_json(const nlohmann::json& j);

/// Lowercase hex SHA-256 of canonical_json(to_json(config)).
std::string config_hash(const PipelineConfig& config);

std::string sha256_hex(const std::string& bytes);

/// True when the sidecar's "config_hash" matches the digest of its embedded
/// "config" object.
bool verify_sidecar(const nlohmann::json& sidecar);

}  // namespace causaug
