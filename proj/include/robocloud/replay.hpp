#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robocloud/learning.hpp"
#include "robocloud/prefetch.hpp"
#include "robocloud/reduction.hpp"
#include "robocloud/tiered_store.hpp"
#include "robocloud/workload.hpp"

namespace robocloud {

struct SystemConfig {
  // Frontend tiers, top first. Defaults hold 10, 20 and 40 ten-megabyte
  // objects, a few users' working sets out of the 20 users generated.
  std::vector<TierConfig> tiers = default_tiers(100 * kMB, 200 * kMB, 400 * kMB);
  AllocatorKind allocator = AllocatorKind::kDirectWrite;
  std::string evictor = "lru";
  LevelCost backend_cost = default_cost(Level::kBackend);
  BackendDescriptor backend{"videos", BackendKind::kInMemoryMock, {}, 0.0, false};

  std::vector<PrefetchStrategy> strategies{PrefetchStrategy::kNone, PrefetchStrategy::kMostRequested,
                                           PrefetchStrategy::kTimePeriod};
  // Share of the top tier that prefetching may fill at each period boundary,
  // right after the tier is reclaimed.
  double prefetch_fraction = 1.0;
  // Idleness gate: foreground events in the last gate_window_s seconds
  // before a boundary must stay below load_threshold.
  double load_threshold = 8.0;
  std::int64_t gate_window_s = 60;

  FramePolicy frames;
  std::size_t labels_per_frame = 3;
  std::optional<InclusionPolicy> pre_learning;
  std::optional<InclusionPolicy> pre_memorization;

  // Modeled metadata query cost: overhead plus a per-returned-row term.
  double query_overhead_ms = 1.0;
  double query_per_row_ms = 0.01;

  void validate() const;
};

struct LatencyStats {
  double mean = 0.0;
  double p95 = 0.0;  // nearest rank
  static LatencyStats of(std::vector<double> samples);
  friend bool operator==(const LatencyStats&, const LatencyStats&) = default;
};

// One replay of one trace under one (allocator, prefetch strategy) pair.
struct RunMetrics {
  std::string strategy;
  std::string allocator;
  std::uint64_t events = 0;
  std::uint64_t ingests = 0;
  std::uint64_t stored = 0;
  std::uint64_t rejected_pre_learning = 0;
  std::uint64_t rejected_pre_memorization = 0;
  std::uint64_t skipped_extractor = 0;
  std::uint64_t reads = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t unresolved_reads = 0;  // reads of objects that were never stored
  std::uint64_t queries = 0;
  double hit_rate = 0.0;
  LatencyStats write_latency;
  LatencyStats read_latency;
  LatencyStats query_latency;
  std::uint64_t moves_total = 0;
  std::uint64_t promotions = 0;
  std::uint64_t prefetch_attempted = 0;
  std::uint64_t prefetch_promoted = 0;
  std::uint64_t prefetch_skipped = 0;
  std::uint64_t prefetch_deferred = 0;
  std::uint64_t metastore_records = 0;
  friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct MetricsReport {
  std::vector<RunMetrics> runs;
  const RunMetrics* find(std::string_view strategy) const;
};

// Stable column order shared by CSV and JSON.
const std::vector<std::string>& report_columns();
std::string to_csv(const MetricsReport& report);
std::string to_json_text(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
void export_report(const MetricsReport& report, const std::string& format, const std::string& path);

// Applies the events in order on a logical clock. Before the first event of
// each 4-hour period the top tier is reclaimed and, if the gate is open, the
// strategy's plan is promoted into it.
RunMetrics replay(const std::vector<TraceEvent>& trace, const SystemConfig& system,
                  PrefetchStrategy strategy);

// One run per configured strategy over the same trace.
MetricsReport replay_all(const std::vector<TraceEvent>& trace, const SystemConfig& system);

struct SimulationConfig {
  WorkloadConfig workload;
  SystemConfig system;
};

MetricsReport simulate(const SimulationConfig& config);

}  // namespace robocloud
