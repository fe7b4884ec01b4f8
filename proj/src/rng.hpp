#pragma once

#include <cmath>
#include <cstdint>

namespace gbv {

// Counter-based generator: every output is a pure function of
// (seed, stream, counter), so parallel substreams never collide and
// replications are bit-reproducible regardless of thread count.
// The output function is the SplitMix64 finalizer over a Weyl sequence.
namespace rngdetail {

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace rngdetail

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(rngdetail::mix64(seed + rngdetail::kGolden) ^
              rngdetail::mix64(stream * rngdetail::kGolden + 0x6a09e667f3bcc909ULL)),
        counter_(0) {}

  // Deterministic sub-seed derivation for replications/chains.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    return rngdetail::mix64(rngdetail::mix64(seed + rngdetail::kGolden) + index * rngdetail::kGolden);
  }

  std::uint64_t next_u64() { return at(counter_++); }

  // Uniform on (0,1), never exactly 0 or 1.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // Box-Muller; consumes exactly two counters per call (no caching, so the
  // consumption pattern is independent of call history).
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double cauchy() { return std::tan(3.14159265358979323846 * (uniform() - 0.5)); }

  // Unbiased-enough bounded draw for desk-scale n (multiply-shift).
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  int rademacher() { return (next_u64() & 1) ? 1 : -1; }

  long poisson(double mean) {
    // Knuth for small means; normal approximation above 50 is never needed
    // here because generators reject means that large.
    const double limit = std::exp(-mean);
    double prod = 1.0;
    long k = 0;
    do {
      prod *= uniform();
      ++k;
    } while (prod > limit);
    return k - 1;
  }

 private:
  std::uint64_t at(std::uint64_t counter) const {
    return rngdetail::mix64(base_ + rngdetail::kGolden * (counter + 1));
  }

  std::uint64_t base_;
  std::uint64_t counter_;
};

}  // namespace gbv
