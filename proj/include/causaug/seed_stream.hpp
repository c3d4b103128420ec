#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace causaug {

/// Philox4x32 with 10 rounds (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Stateless: a block is a pure function of (counter, key).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                           std::array<std::uint32_t, 2> key) noexcept;

/// One step of a substream path.
struct PathStep {
  std::string label;
  std::uint64_t counter = 0;

  friend bool operator==(const PathStep&, const PathStep&) = default;
};

/// Deterministic random substream identified by (master seed, path).
///
/// The Philox key is a hash of the master seed and the full path, and the
/// Philox counter is the draw position inside the stream. Consequently a
/// stream's values depend only on its identity and on how many values were
/// drawn from it, never on other streams, threads, or call interleaving.
/// Child streams are derived from the path alone, so deriving a child does
/// not consume values from the parent.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t master_seed);

  /// Substream `path + (label, counter)`.
  SeedStream child(std::string_view label, std::uint64_t counter = 0) const;

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  const std::vector<PathStep>& path() const noexcept { return path_; }
  /// Number of 64-bit words consumed so far.
  std::uint64_t position() const noexcept { return position_; }
  /// "seed/label:counter/label:counter" form, used in provenance records.
  std::string describe() const;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (cosine branch only; two uniforms per value).
  double gaussian() noexcept;
  /// Uniform integer in [0, n); n must be > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  SeedStream(std::uint64_t master_seed, std::vector<PathStep> path);
  void derive_key() noexcept;

  std::uint64_t master_seed_;
  std::vector<PathStep> path_;
  std::array<std::uint32_t, 2> key_{};
  std::uint64_t position_ = 0;
};

/// n i.i.d. standard normal values drawn from `stream`.
std::vector<float> draw_gaussian(SeedStream& stream, std::size_t n);

}  // namespace causaug
