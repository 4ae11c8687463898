#include "cpa/synth.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpa/engine.hpp"
#include "parallel.hpp"

namespace cpa {

GaussianStream::GaussianStream(std::uint64_t seed, std::uint64_t stream) noexcept
    : rng_(SplitMix64(seed ^ SplitMix64(stream ^ 0x5851f42d4c957f2dULL).next()).next()) {}

double GaussianStream::next() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = rng_.next_open01();
  const double u2 = rng_.next_open01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void SynthConfig::spread_leaks(std::size_t stride) noexcept {
  for (std::size_t b = 0; b < 16; ++b) leak_positions[b] = b * stride;
}

void SynthConfig::validate() const {
  if (n < 1) throw std::invalid_argument("synthetic trace count must be >= 1");
  if (m < 16) throw std::invalid_argument("need m >= 16 to place 16 distinct leak samples");
  if (!(signal_scale > 0.0) || !std::isfinite(signal_scale))
    throw std::invalid_argument("signal scale must be a positive finite number");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw std::invalid_argument("noise sigma must be a non-negative finite number");
  if (!std::isfinite(offset)) throw std::invalid_argument("offset must be finite");
  for (std::size_t b = 0; b < 16; ++b) {
    if (leak_positions[b] >= m)
      throw std::invalid_argument("leak position for byte " + std::to_string(b) + " is " +
                                  std::to_string(leak_positions[b]) + ", not below m = " +
                                  std::to_string(m));
    for (std::size_t c = 0; c < b; ++c)
      if (leak_positions[c] == leak_positions[b])
        throw std::invalid_argument("leak positions for bytes " + std::to_string(c) + " and " +
                                    std::to_string(b) + " coincide");
  }
}

SynthConfig default_synth_config(const MasterKey& key, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.key = key;
  cfg.seed = seed;
  cfg.spread_leaks(8);
  return cfg;
}

SynthConfig synth_config_for(const MasterKey& key, std::size_t n, std::size_t m, double sigma,
                             std::uint64_t seed) {
  SynthConfig cfg;
  cfg.key = key;
  cfg.n = n;
  cfg.m = m;
  cfg.noise_sigma = sigma;
  cfg.seed = seed;
  cfg.spread_leaks(m / 16);
  return cfg;
}

std::pair<TraceSet, CiphertextSet> generate_dataset(const SynthConfig& cfg, std::size_t workers) {
  cfg.validate();
  std::vector<double> samples(cfg.n * cfg.m);
  std::vector<std::uint8_t> ct(cfg.n * 16);
  const auto& src = shiftrows_source_table();

  constexpr std::size_t kTracesPerItem = 64;
  const std::size_t items = (cfg.n + kTracesPerItem - 1) / kTracesPerItem;
  detail::parallel_for(items, resolve_workers(workers), [&](std::size_t item) {
    const std::size_t i1 = std::min(cfg.n, (item + 1) * kTracesPerItem);
    for (std::size_t i = item * kTracesPerItem; i < i1; ++i) {
      GaussianStream rng(cfg.seed, i);
      Block plaintext;
      const std::uint64_t lo = rng.next_u64();
      const std::uint64_t hi = rng.next_u64();
      for (int k = 0; k < 8; ++k) {
        plaintext[k] = static_cast<std::uint8_t>(lo >> (8 * k));
        plaintext[8 + k] = static_cast<std::uint8_t>(hi >> (8 * k));
      }
      const StateTrace st = encrypt_with_states(plaintext, cfg.key);
      std::copy(st.ciphertext.begin(), st.ciphertext.end(), ct.begin() + 16 * i);

      double* row = samples.data() + i * cfg.m;
      for (std::size_t j = 0; j < cfg.m; ++j) row[j] = cfg.offset;
      for (std::size_t b = 0; b < 16; ++b) {
        const std::size_t p = src[b];
        const int hd = hamming_weight(static_cast<std::uint8_t>(st.round9_state[p] ^ st.ciphertext[p]));
        row[cfg.leak_positions[b]] += cfg.signal_scale * hd;
      }
      if (cfg.noise_sigma > 0.0)
        for (std::size_t j = 0; j < cfg.m; ++j) row[j] += cfg.noise_sigma * rng.next();
    }
  });

  return {TraceSet::from_rows(cfg.n, cfg.m, std::move(samples), cfg.precision),
          CiphertextSet(std::move(ct))};
}

}  // namespace cpa
