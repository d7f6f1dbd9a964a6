#include "robocloud/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "robocloud/error.hpp"
#include "robocloud/rng.hpp"

namespace robocloud {

namespace {

const ObjectPath kBenchRoot("/bench");

void mount_bench(MountTable& m) {
  m.mount(kBenchRoot, BackendDescriptor{"bench", BackendKind::kInMemoryMock, {}, 0.0, false});
}

Blob payload_for(Rng& rng, std::size_t n) {
  Blob b(n);
  for (auto& c : b) c = static_cast<std::uint8_t>(rng.below(256));
  return b;
}

}  // namespace

std::vector<Block> saturation_script(const SaturationOptions& options) {
  if (options.avg_size == 0) throw Error(ErrorCode::kInvalidArgument, "avg_size must be > 0");
  if (options.jitter < 0 || options.jitter >= 1) throw Error(ErrorCode::kInvalidArgument, "jitter outside [0,1)");
  Rng rng(options.seed);
  std::vector<Block> out;
  out.reserve(options.writes);
  const double avg = static_cast<double>(options.avg_size);
  for (std::size_t i = 0; i < options.writes; ++i) {
    const double f = 1.0 + options.jitter * (2.0 * rng.uniform01() - 1.0);
    const auto size = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(avg * f)));
    const auto path = kBenchRoot.join("w" + std::to_string(i));
    out.push_back(Block{BlockId(path.str()), size, path});
  }
  return out;
}

SaturationResult run_saturation(const SaturationOptions& options, AllocatorKind allocator) {
  MountTable mounts;
  mount_bench(mounts);
  StoreOptions so;
  so.tiers = options.tiers;
  so.allocator = allocator;
  TieredStore store(so, mounts);
  const Blob payload{0x5a};
  SaturationResult r;
  r.allocator = allocator;
  for (const auto& b : saturation_script(options)) {
    r.latencies_ms.push_back(store.write_block(b, payload).modeled_latency_ms);
  }
  r.writes = r.latencies_ms.size();
  if (r.writes > 0) {
    r.mean_latency_ms = std::accumulate(r.latencies_ms.begin(), r.latencies_ms.end(), 0.0) /
                        static_cast<double>(r.writes);
    auto sorted = r.latencies_ms;
    std::sort(sorted.begin(), sorted.end());
    r.p95_latency_ms = sorted[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(r.writes))) - 1];
  }
  r.total_moves = store.metrics_snapshot().total_moves;
  store.check_invariants();
  return r;
}

AllocatorComparison compare_allocators(const SaturationOptions& options) {
  AllocatorComparison c;
  c.cascade = run_saturation(options, AllocatorKind::kDefaultCascade);
  c.direct = run_saturation(options, AllocatorKind::kDirectWrite);
  c.ratio = c.direct.mean_latency_ms > 0 ? c.cascade.mean_latency_ms / c.direct.mean_latency_ms : 0.0;
  return c;
}

SoakResult run_soak(const SoakOptions& options) {
  MountTable mounts;
  mount_bench(mounts);
  StoreOptions so;
  so.tiers = options.tiers;
  so.allocator = options.allocator;
  so.evictor = options.evictor;
  TieredStore store(so, mounts);
  const auto levels = store.tier_levels();
  std::uint64_t smallest = UINT64_MAX;
  for (const auto& t : options.tiers) smallest = std::min(smallest, t.capacity);

  Rng rng(options.seed);
  std::map<BlockId, Blob> reference;
  std::vector<BlockId> ids;
  SoakResult r;
  for (std::size_t op = 0; op < options.operations; ++op) {
    const double u = rng.uniform01();
    if (ids.empty() || u < 0.4) {
      const auto path = kBenchRoot.join("s" + std::to_string(ids.size()));
      const std::uint64_t size = 1 + rng.below(std::max<std::uint64_t>(1, smallest / 2));
      Blob data = payload_for(rng, 1 + rng.below(64));
      store.write_block(Block{BlockId(path.str()), size, path}, data);
      reference.emplace(BlockId(path.str()), std::move(data));
      ids.emplace_back(path.str());
      ++r.writes;
    } else if (u < 0.8) {
      const auto& id = ids[rng.below(ids.size())];
      if (store.read_block(id).first != reference.at(id)) ++r.mismatches;
      ++r.reads;
    } else {
      store.promote_block(ids[rng.below(ids.size())], levels[rng.below(levels.size())]);
      ++r.promotes;
    }
    if (options.check_every > 0 && (op + 1) % options.check_every == 0) {
      store.check_invariants();
      ++r.invariant_checks;
    }
  }
  for (const auto& [id, bytes] : reference) {
    if (store.read_block(id).first != bytes) ++r.mismatches;
    ++r.verified;
  }
  store.check_invariants();
  return r;
}

}  // namespace robocloud
