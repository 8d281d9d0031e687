#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

namespace oadf {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Derive an independent seed from a base seed and a salt (tree index,
// stream index, ...). Stable across platforms.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t s = seed ^ (0xD1B54A32D192ED03ull * (salt + 1));
  return splitmix64(s);
}

// xoshiro256++ with splitmix64 seeding. The generator algorithm is pinned so
// that synthetic data and trained models are bit-identical across platforms;
// std:: distributions are implementation-defined and deliberately avoided.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = std::rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = std::rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n) by bitmask rejection.
  std::uint64_t below(std::uint64_t n) {
    const int width = 64 - std::countl_zero(n | 1);
    const std::uint64_t mask = (width == 64) ? ~0ull : ((1ull << width) - 1);
    std::uint64_t r;
    do {
      r = next() & mask;
    } while (r >= n);
    return r;
  }

  // Inclusive integer range.
  int uniform_int(int lo, int hi) { return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1)); }

  double uniform_real(double lo, double hi) { return lo + uniform() * (hi - lo); }

  // Standard normal via Box-Muller; the spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace oadf
