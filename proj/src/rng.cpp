#include "rmt/rng.hpp"

#include <cmath>
#include <numbers>

namespace rmt
{

namespace
{
constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t Seed::trial_key(std::uint64_t t) const
{
  const std::uint64_t base = splitmix64_mix(master ^ splitmix64_mix(stream + golden));
  return splitmix64_mix(base + (t + 1) * golden);
}

std::uint64_t CounterRng::next_u64()
{
  ++counter_;
  return splitmix64_mix(key_ + counter_ * golden);
}

double CounterRng::uniform()
{
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::normal()
{
  if (cached_normal_)
  {
    const double z = *cached_normal_;
    cached_normal_.reset();
    return z;
  }
  const double u1 = uniform_pos();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::uint64_t CounterRng::uniform_int(std::uint64_t lo, std::uint64_t hi)
{
  const std::uint64_t span = hi - lo + 1;
  if (span == 0)
  {
    return next_u64();
  }
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t x = next_u64();
  while (x >= limit)
  {
    x = next_u64();
  }
  return lo + x % span;
}

}  // namespace rmt
