#ifndef TPT_RNG_HPP
#define TPT_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>

namespace tpt {

/// Algorithm identifier written into run metadata so that outputs can be
/// reproduced by any implementation of the same generator.
inline constexpr const char* kGeneratorId = "splitmix64";

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Derived seed for substream `index` of `seed`. Used wherever work is
/// split across cells, trajectories or period slices, so results do not
/// depend on iteration order or thread count.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + kGolden * (index + 1));
}

}  // namespace detail

/// splitmix64 stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  static Rng substream(std::uint64_t seed, std::uint64_t index) {
    return Rng(detail::derive_seed(seed, index));
  }

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::mix64(state_);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in (0, 1); safe as a log() argument.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  /// One standard-normal pair via Box-Muller; consumes two uniforms.
  void normal_pair(double& z0, double& z1) {
    constexpr double two_pi = 6.283185307179586476925287;
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    z0 = r * std::cos(two_pi * u2);
    z1 = r * std::sin(two_pi * u2);
  }

  /// Index sampled from the probability vector `p` (assumed to sum to ~1).
  /// Leftover mass from rounding goes to the last positive entry.
  int sample_index(std::span<const double> p) {
    const double u = uniform();
    double acc = 0.0;
    int last_positive = 0;
    for (int i = 0; i < static_cast<int>(p.size()); ++i) {
      if (p[i] > 0.0) {
        acc += p[i];
        last_positive = i;
        if (u < acc) return i;
      }
    }
    return last_positive;
  }

 private:
  std::uint64_t state_;
};

}  // namespace tpt

#endif  // TPT_RNG_HPP
