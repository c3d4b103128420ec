#include "causaug/seed_stream.hpp"

#include <cmath>
#include <numbers>

namespace causaug {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

}  // namespace

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) noexcept {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

SeedStream::SeedStream(std::uint64_t master_seed) : master_seed_(master_seed) { derive_key(); }

SeedStream::SeedStream(std::uint64_t master_seed, std::vector<PathStep> path)
    : master_seed_(master_seed), path_(std::move(path)) {
  derive_key();
}

void SeedStream::derive_key() noexcept {
  std::uint64_t h = splitmix64(master_seed_);
  for (const auto& step : path_) {
    h = splitmix64(h ^ fnv1a(step.label));
    h = splitmix64(h ^ step.counter);
  }
  key_ = {static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
}

SeedStream SeedStream::child(std::string_view label, std::uint64_t counter) const {
  auto path = path_;
  path.push_back({std::string(label), counter});
  return SeedStream(master_seed_, std::move(path));
}

std::string SeedStream::describe() const {
  std::string out = std::to_string(master_seed_);
  for (const auto& step : path_) {
    out += '/';
    out += step.label;
    out += ':';
    out += std::to_string(step.counter);
  }
  return out;
}

std::uint64_t SeedStream::next_u64() noexcept {
  // Each Philox block yields two 64-bit words; position selects block and half.
  const std::uint64_t block = position_ >> 1;
  const auto out = philox4x32_10(
      {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32), 0u, 0u}, key_);
  const bool upper = (position_ & 1u) != 0;
  ++position_;
  return upper ? (static_cast<std::uint64_t>(out[3]) << 32 | out[2])
               : (static_cast<std::uint64_t>(out[1]) << 32 | out[0]);
}

double SeedStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeedStream::gaussian() noexcept {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t SeedStream::below(std::uint64_t n) noexcept {
  // Lemire-style rejection to avoid modulo bias.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

std::vector<float> draw_gaussian(SeedStream& stream, std::size_t n) {
  std::vector<float> out(n);
  for (auto& v : out) v = static_cast<float>(stream.gaussian());
  return out;
}

}  // namespace causaug
