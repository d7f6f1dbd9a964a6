#pragma once

#include <cstdint>
#include <vector>

#include "robocloud/tiered_store.hpp"

namespace robocloud {

// Write-only stress: far more bytes than the frontend holds, so nearly every
// write lands on a full store.
struct SaturationOptions {
  std::size_t writes = 1000;
  std::uint64_t seed = 42;
  std::uint64_t avg_size = 10 * kMB;
  double jitter = 0.05;  // sizes uniform in avg * [1 - jitter, 1 + jitter]
  std::vector<TierConfig> tiers = default_tiers(100 * kMB, 200 * kMB, 400 * kMB);
};

std::vector<Block> saturation_script(const SaturationOptions& options);

struct SaturationResult {
  AllocatorKind allocator = AllocatorKind::kDirectWrite;
  std::size_t writes = 0;
  double mean_latency_ms = 0.0;
  double p95_latency_ms = 0.0;
  std::uint64_t total_moves = 0;
  std::vector<double> latencies_ms;
};

SaturationResult run_saturation(const SaturationOptions& options, AllocatorKind allocator);

struct AllocatorComparison {
  SaturationResult cascade;
  SaturationResult direct;
  double ratio = 0.0;  // cascade mean / direct mean
};
AllocatorComparison compare_allocators(const SaturationOptions& options);

// Randomized write/read/promote loop against a byte-exact reference copy.
struct SoakOptions {
  std::size_t operations = 10'000;
  std::uint64_t seed = 7;
  AllocatorKind allocator = AllocatorKind::kDirectWrite;
  std::string evictor = "lru";
  std::vector<TierConfig> tiers = default_tiers(60 * kMB, 120 * kMB, 240 * kMB);
  std::size_t check_every = 1;  // invariant check cadence, in operations
};

struct SoakResult {
  std::size_t writes = 0;
  std::size_t reads = 0;
  std::size_t promotes = 0;
  std::size_t invariant_checks = 0;
  std::size_t verified = 0;    // final read-back of every written object
  std::size_t mismatches = 0;  // reads whose bytes differed from the reference
};

// Throws if a capacity or residency invariant breaks.
SoakResult run_soak(const SoakOptions& options);

}  // namespace robocloud
