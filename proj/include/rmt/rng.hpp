#pragma once

#include <cstdint>
#include <optional>

namespace rmt
{

// 64-bit avalanche used both for output and for deriving substreams.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z)
{
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

struct Seed
{
  std::uint64_t master = 0;
  std::uint64_t stream = 0;

  // Key of trial t: mix(mix(master ^ mix(stream + G)) + (t + 1) * G), G the golden-ratio
  // increment. Stable across releases; changing it changes every recorded result.
  std::uint64_t trial_key(std::uint64_t t) const;

  // Seed whose master is the trial key of t; used to hand a derived seed to a sampler.
  Seed substream(std::uint64_t t) const { return Seed{trial_key(t), stream}; }

  bool operator==(const Seed &) const = default;
};

// Counter-based generator: output k is splitmix64_mix(key + k * G). Any draw can be
// recomputed from (key, k), so parallel trials never share state.
class CounterRng
{
public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  explicit CounterRng(const Seed &seed) : key_(seed.trial_key(0)) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double uniform();

  // Uniform on (0, 1].
  double uniform_pos() { return 1.0 - uniform(); }

  bool bit() { return (next_u64() >> 63) != 0; }

  // Standard normal by Box-Muller; the second variate of each pair is cached.
  double normal();

  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi);  // inclusive

  std::uint64_t counter() const { return counter_; }

private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::optional<double> cached_normal_;
};

}  // namespace rmt
