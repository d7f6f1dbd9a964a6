#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "robocloud/learning.hpp"
#include "robocloud/metastore.hpp"
#include "robocloud/tiered_store.hpp"

namespace robocloud {

// 2023-11-15 00:00:00 UTC; day 0 of every generated trace.
inline constexpr std::int64_t kTraceEpoch = 1'700'006'400;
inline const std::string kVideoPrefix = "/videos";

struct QueryMix {
  double key_lookup = 0.25;
  double label = 0.35;
  double location = 0.25;
  double time_range = 0.15;
};

struct WorkloadConfig {
  int days = 30;
  int users = 20;
  int streams_per_user_per_day = 4;
  std::uint64_t avg_object_size = 10 * kMB;
  double label_popularity = 1.0;  // Zipf exponent over the vocabulary
  double period_locality = 0.9;   // P(a period's hot group repeats next day)
  QueryMix query_mix;
  std::uint64_t seed = 42;

  int reads_per_period = 60;
  int queries_per_period = 10;
  double hot_fraction = 0.85;       // share of reads aimed at the period's hot group
  double object_popularity = 1.0;   // Zipf exponent over a group's objects, oldest first
  int min_duration_s = 10;
  int max_duration_s = 60;

  void validate() const;
};

// Everything needed to rebuild a synthetic stream: one frame per second,
// frame bytes drawn from frame_seed.
struct StreamDescriptor {
  std::string session_id;
  std::string user_id;
  std::int64_t start_timestamp = 0;
  int duration_s = 0;
  std::string location;
  std::uint64_t frame_seed = 0;
  std::uint64_t size_bytes = 0;
  friend bool operator==(const StreamDescriptor&, const StreamDescriptor&) = default;
};

VideoStream synthesize_stream(const StreamDescriptor& d);

enum class TraceKind { kIngest, kQuery, kRead };
std::string to_string(TraceKind kind);

struct TraceEvent {
  std::int64_t t = 0;
  std::variant<StreamDescriptor, QueryPredicate, ObjectPath> payload;
  TraceKind kind() const { return static_cast<TraceKind>(payload.index()); }
};

void to_json(nlohmann::json& j, const TraceEvent& e);
void from_json(const nlohmann::json& j, TraceEvent& e);

// Ingests for every user-stream, then reads and queries per 4-hour period.
// Each period has a hot group (user) that keeps its slot the next day with
// probability period_locality and otherwise moves to a different user.
std::vector<TraceEvent> generate_workload(const WorkloadConfig& config);

// The hot group the generator chose for (day, period).
std::vector<std::vector<std::string>> hot_groups(const WorkloadConfig& config);

void write_trace(const std::vector<TraceEvent>& trace, std::ostream& out);
std::vector<TraceEvent> read_trace(std::istream& in);

const std::vector<std::string>& default_locations();

}  // namespace robocloud
