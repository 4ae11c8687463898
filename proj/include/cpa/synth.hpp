#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "cpa/aes.hpp"
#include "cpa/trace_model.hpp"

namespace cpa {

/// SplitMix64 (Steele, Lea, Flood 2014). Fully specified by its integer
/// arithmetic, so streams are identical on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  /// Uniform in (0, 1): the top 53 bits, offset by half an ulp.
  double next_open01() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Standard normal deviates from SplitMix64 via the Box-Muller transform.
/// Stream `stream` of `seed` is seeded with SplitMix64 of seed and stream,
/// so per-trace streams are independent of generation order.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept;
  double next() noexcept;
  std::uint64_t next_u64() noexcept { return rng_.next(); }

 private:
  SplitMix64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct SynthConfig {
  MasterKey key;
  std::size_t n = 1000;
  std::size_t m = 128;
  std::array<std::size_t, 16> leak_positions{};
  double signal_scale = 1.0;
  double noise_sigma = 2.0;
  double offset = 0.0;
  std::uint64_t seed = 1;
  Precision precision = Precision::Double;

  /// leak_positions[b] = b * stride.
  void spread_leaks(std::size_t stride) noexcept;
  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

/// Default calibration: n = 1000, m = 128, sigma = 2, a = 1, c = 0,
/// leaks at b * 8.
SynthConfig default_synth_config(const MasterKey& key, std::uint64_t seed = 1);

/// Leak stride m / 16 for m >= 16.
SynthConfig synth_config_for(const MasterKey& key, std::size_t n, std::size_t m, double sigma,
                             std::uint64_t seed);

std::pair<TraceSet, CiphertextSet> generate_dataset(const SynthConfig& cfg, std::size_t workers = 1);

}  // namespace cpa
