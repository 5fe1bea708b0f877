#pragma once

#include <cstdint>
#include <random>

namespace nmg {

// Seeded generator with an explicit bits-to-double mapping.  The standard
// distributions are implementation-defined, so uniform draws are derived
// directly from the mt19937_64 output to keep streams identical across
// compilers and standard-library versions.  The call counter makes the
// stream position serializable (save seed + calls, replay with discard).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed), seed_(seed) {}

  // Uniform in [0, 1).
  double unit() {
    ++calls_;
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + unit() * (hi - lo); }

  // Uniform index in [0, n); n must be > 0.
  std::size_t pick(std::size_t n) {
    return static_cast<std::size_t>(unit() * static_cast<double>(n));
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t calls() const { return calls_; }

  void restore(std::uint64_t seed, std::uint64_t calls) {
    eng_.seed(seed);
    seed_ = seed;
    calls_ = 0;
    for (std::uint64_t i = 0; i < calls; ++i) {
      ++calls_;
      eng_();
    }
  }

 private:
  std::mt19937_64 eng_;
  std::uint64_t seed_ = 0;
  std::uint64_t calls_ = 0;
};

// Stable mixing of a base seed with a stream index (splitmix64 finalizer), so
// generated suites can derive one independent seed per scenario.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace nmg
