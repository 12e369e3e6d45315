#pragma once

#include <cmath>
#include <cstdint>

namespace heavytail {

// xoshiro256++ 1.0 (Blackman & Vigna, 2019), seeded through splitmix64.
// The whole state is four 64-bit words and the output sequence is fully
// specified by the constants below, so equal seeds give bit-identical
// streams on every platform and compiler.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    // splitmix64 expansion of the seed; also handles seed == 0.
    std::uint64_t x = seed;
    for (auto& word : state_) {
      x += 0x9E3779B97F4A7C15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
      z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
      word = z ^ (z >> 31);
    }
  }

  // Independent stream for a Monte-Carlo task: seed = master ^ index,
  // decorrelated by the splitmix64 expansion in the constructor.
  static Rng for_task(std::uint64_t master_seed, std::uint64_t task_index) {
    return Rng(master_seed ^ task_index);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log/pow argument.
  double uniform_open_closed() { return 1.0 - uniform(); }

  // Standard normal via the Marsaglia polar method; the second variate of
  // each accepted pair is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  std::uint64_t seed_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace heavytail
