#pragma once

// Counter-based random numbers.
//
// Every draw is a pure function of (seed, stream, counter): there is no
// mutable generator state, so a Monte Carlo run is reproducible under any
// work partition -- the draw for (path p, step k, component c) is the same
// whether paths are generated by one worker or sixteen.  The mixing
// function is the splitmix64 finalizer, which passes BigCrush when used
// as a counter hash.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace gexp {

namespace detail {
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ull;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBull;
  z ^= z >> 31;
  return z;
}
}  // namespace detail

// A stateless stream of doubles indexed by a 64-bit counter.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : base_(detail::mix64(detail::mix64(seed) +
                            (stream + 1) * detail::kGolden)) {}

  std::uint64_t bits(std::uint64_t counter) const {
    return detail::mix64(base_ + (counter + 1) * detail::kGolden);
  }

  // Uniform on (0, 1]; never returns 0 so log() is safe.
  double u01(std::uint64_t counter) const {
    return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller; consumes counters 2c and 2c+1.
  double gauss(std::uint64_t counter) const {
    const double u1 = u01(2 * counter);
    const double u2 = u01(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t base_;
};

// Named streams so independent consumers of one user seed never collide.
enum class RngStream : std::uint64_t {
  kPaths = 1,        // driving noise increments
  kPathsFresh = 2,   // re-evaluation runs (fresh from the search stream)
  kIntegrands = 3,   // randomly generated test integrands
  kOptimizer = 4,    // cross-entropy style candidate sampling
};

inline CounterRng make_rng(std::uint64_t seed, RngStream stream) {
  return CounterRng(seed, static_cast<std::uint64_t>(stream));
}

// Deterministically derive a sub-seed (e.g. one per experiment id).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return detail::mix64(detail::mix64(seed) ^
                       detail::mix64(salt * detail::kGolden + 1));
}

}  // namespace gexp
