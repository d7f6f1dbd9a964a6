#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace robocloud {

// Seeded random stream with portable conversions. std::*_distribution output
// differs between standard libraries, so every draw here is derived directly
// from mt19937_64, whose sequence is fixed by the standard.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  // Uniform in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(
                    below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

// Derives an independent seed for a named sub-stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// Zipf(s) over ranks 0..n-1 by inverse CDF lookup.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent);

  std::size_t operator()(Rng& rng) const;
  std::size_t size() const { return cdf_.size(); }
  double probability(std::size_t rank) const;

 private:
  std::vector<double> cdf_;
};

}  // namespace robocloud
