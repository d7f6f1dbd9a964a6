#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "robocloud/replay.hpp"

namespace robocloud {

// "10MB", "1.5 GB", "4096", "2KB"; decimal units (1 MB = 1e6 bytes).
std::uint64_t parse_bytes(std::string_view text);

// Hierarchical YAML configuration:
//
//   seed: 42                    # workload seed, also the default sampler seed
//   workload: {days, users, streams_per_user_per_day, avg_object_size,
//              label_popularity, period_locality, reads_per_period,
//              queries_per_period, hot_fraction, object_popularity,
//              query_mix: {key_lookup, label, location, time_range}}
//   store:    {allocator, evictor,
//              tiers: [{name, capacity, read_overhead_ms, write_overhead_ms,
//                       throughput_mb_s}],
//              backend: {kind, root, latency_ms, read_overhead_ms,
//                        throughput_mb_s}}
//   prefetch: {strategies: [...], fraction, load_threshold, gate_window_s}
//   pipeline: {frame_interval, labels_per_frame}
//   reduction: {pre_learning: {kind, base_rate, location_multipliers, p_min, seed},
//               pre_memorization: {kind, base_rate, label_weights, p_min, seed}}
//   query_cost: {overhead_ms, per_row_ms}
//
// Every key is optional; missing keys keep their defaults.
SimulationConfig parse_simulation_config(const std::string& yaml_text);
SimulationConfig load_simulation_config(const std::filesystem::path& path);

}  // namespace robocloud
