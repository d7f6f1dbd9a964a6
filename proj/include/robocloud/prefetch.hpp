#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "robocloud/backend.hpp"
#include "robocloud/metastore.hpp"
#include "robocloud/tiered_store.hpp"

namespace robocloud {

inline constexpr std::int64_t kSecondsPerDay = 86'400;
inline constexpr std::int64_t kSecondsPerPeriod = 14'400;  // six periods a day

struct AccessLogEntry {
  std::int64_t timestamp = 0;
  ObjectPath object_path;
  std::string group;  // grouping key ("table"), e.g. a user's session family
  std::set<std::string> labels;
  std::string location;
  friend bool operator==(const AccessLogEntry&, const AccessLogEntry&) = default;
};

void to_json(nlohmann::json& j, const AccessLogEntry& e);
void from_json(const nlohmann::json& j, AccessLogEntry& e);

// Append-only, time-ordered. Aggregate counters are kept incrementally so
// all-time rankings do not rescan the log.
class AccessLog {
 public:
  void record_access(AccessLogEntry entry);

  std::size_t size() const { return entries_.size(); }
  const std::vector<AccessLogEntry>& entries() const { return entries_; }
  // Entries with start <= timestamp < end.
  std::pair<std::size_t, std::size_t> window(std::int64_t start, std::int64_t end) const;

  const std::map<std::string, std::uint64_t>& group_counts() const { return group_counts_; }
  const std::map<ObjectPath, std::uint64_t>& object_counts(const std::string& group) const;
  const std::map<std::string, std::uint64_t>& label_counts() const { return label_counts_; }
  const std::map<std::string, std::uint64_t>& location_counts() const { return location_counts_; }

  void export_jsonl(std::ostream& out) const;
  static AccessLog import_jsonl(std::istream& in);

 private:
  std::vector<AccessLogEntry> entries_;
  std::map<std::string, std::uint64_t> group_counts_;
  std::map<std::string, std::map<ObjectPath, std::uint64_t>> group_objects_;
  std::map<std::string, std::uint64_t> label_counts_;
  std::map<std::string, std::uint64_t> location_counts_;
};

// floor((t mod 86400) / 14400), in [0, 5].
int period_index(std::int64_t t);

// [start, end) of the period containing `now`, shifted back one day.
struct PeriodWindow {
  std::int64_t start = 0;
  std::int64_t end = 0;
};
PeriodWindow previous_day_window(std::int64_t now);

enum class PrefetchStrategy { kNone, kMostRequested, kTimePeriod, kLabelHot, kLocationHot };
std::string to_string(PrefetchStrategy s);
PrefetchStrategy prefetch_strategy_from_string(std::string_view name);

struct PrefetchPlan {
  PrefetchStrategy strategy = PrefetchStrategy::kNone;
  std::vector<ObjectPath> candidates;  // in promotion order
  std::uint64_t byte_budget = 0;
  std::uint64_t planned_bytes = 0;
};
void to_json(nlohmann::json& j, const PrefetchPlan& p);

// Logical size of an object, or nullopt when it is unknown (such objects are
// never planned).
using SizeLookup = std::function<std::optional<std::uint64_t>(const ObjectPath&)>;
SizeLookup sizes_from(std::map<ObjectPath, std::uint64_t> sizes);
SizeLookup sizes_from(const TieredStore& store);

// Every planner ranks keys by count descending with lexicographic ties and
// adds whole objects in rank order until the next one would overflow the
// budget.
PrefetchPlan plan_most_requested(const AccessLog& log, std::uint64_t byte_budget,
                                 const SizeLookup& sizes);
PrefetchPlan plan_time_period(const AccessLog& log, std::int64_t now, std::uint64_t byte_budget,
                              const SizeLookup& sizes);
PrefetchPlan plan_label_hot(const AccessLog& log, const MetaStore& meta,
                            std::uint64_t byte_budget, const SizeLookup& sizes);
PrefetchPlan plan_location_hot(const AccessLog& log, const MetaStore& meta,
                               std::uint64_t byte_budget, const SizeLookup& sizes);
PrefetchPlan make_plan(PrefetchStrategy strategy, const AccessLog& log, const MetaStore& meta,
                       std::int64_t now, std::uint64_t byte_budget, const SizeLookup& sizes);

// Scalar load signal compared against a threshold; execution continues only
// while load() < threshold.
struct IdleGate {
  std::function<double()> load = [] { return 0.0; };
  double threshold = 1.0;
  bool open() const { return load() < threshold; }
};

struct PromotionReport {
  std::uint64_t attempted = 0;
  std::uint64_t promoted = 0;
  std::uint64_t skipped = 0;
  std::uint64_t deferred = 0;  // not attempted because the gate closed
  double modeled_latency_ms = 0.0;
  std::vector<PromotionRecord> records;  // one per attempted candidate
};

// Best-effort promotion without eviction. With no explicit target each
// candidate goes to the first tier that has room for it.
PromotionReport execute_plan(const PrefetchPlan& plan, TieredStore& store, const IdleGate& gate,
                             std::optional<Level> target = std::nullopt);

}  // namespace robocloud
