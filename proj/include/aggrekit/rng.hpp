#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace aggrekit {

// Purpose tags for deriving independent substreams from one run seed.
// Keeping corruption channels on separate streams means toggling, say,
// outliers does not shift the noise or mask draws of the same seed.
enum class StreamPurpose : std::uint64_t {
  kGeneric = 0x9e3779b97f4a7c15ull,
  kFactors = 0xa0761d6478bd642full,
  kGains = 0xe7037ed1a0b428dbull,
  kOffsets = 0x8ebc6af09c88c6e3ull,
  kNoise = 0x589965cc75374cc3ull,
  kOutliers = 0x1d8e4e27c47d124full,
  kMask = 0xeb44accab455d165ull,
  kPlacement = 0x2545f4914f6cdd1dull,
  kKinematics = 0x94d049bb133111ebull,
  kSelection = 0xbf58476d1ce4e5b9ull,
};

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Deterministic random stream: the engine sequence is pinned by the C++
// standard and every transform below is written out explicitly, so results
// are reproducible across compilers and standard libraries.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  RandomStream(std::uint64_t seed, StreamPurpose purpose)
      : engine_(derive_seed(seed, purpose)) {}

  static std::uint64_t derive_seed(std::uint64_t seed, StreamPurpose purpose) {
    std::uint64_t s = seed ^ static_cast<std::uint64_t>(purpose);
    splitmix64(s);
    return splitmix64(s);
  }

  std::uint64_t bits() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double u01() { return static_cast<double>(bits() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }

  // Unbiased enough for simulation work (Lemire reduction without rejection).
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(bits()) * n) >> 64);
  }

  bool bernoulli(double p) { return u01() < p; }

  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // Box-Muller; u1 nudged away from zero to keep the log finite.
    double u1 = u01();
    double u2 = u01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double gaussian(double mean, double stddev) {
    return mean + stddev * gaussian();
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace aggrekit
