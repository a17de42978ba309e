// Splittable counter-based random stream. Every draw is a pure
// function of (seed, stream, counter), so parallel or re-ordered
// evaluation cannot change results.

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace hfepr {

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace detail

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {}

  // Derives an independent stream (e.g. one per Monte Carlo trial).
  CounterRng split(std::uint64_t substream) const {
    return CounterRng(detail::splitmix64(seed_ ^ detail::splitmix64(stream_)),
                      substream);
  }

  // Uniform in (0, 1), exclusive of the ends.
  double uniform() {
    const std::uint64_t word = detail::splitmix64(
        detail::splitmix64(seed_ ^ detail::splitmix64(stream_)) + counter_++);
    return (static_cast<double>(word >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace hfepr
