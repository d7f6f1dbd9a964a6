#include "robocloud/prefetch.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "robocloud/error.hpp"

namespace robocloud {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

template <typename Key>
std::vector<Key> ranked(const std::map<Key, std::uint64_t>& counts) {
  std::vector<std::pair<Key, std::uint64_t>> v(counts.begin(), counts.end());
  // map order is already lexicographic, so a stable sort keeps ties that way
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<Key> out;
  out.reserve(v.size());
  for (auto& [k, _] : v) out.push_back(k);
  return out;
}

// Greedy whole-object fill. Returns false once the budget is exhausted.
class Filler {
 public:
  Filler(PrefetchPlan& plan, const SizeLookup& sizes) : plan_(plan), sizes_(sizes) {}

  bool offer(const ObjectPath& path) {
    if (full_) return false;
    if (seen_.contains(path)) return true;
    auto size = sizes_(path);
    if (!size) return true;
    if (plan_.planned_bytes + *size > plan_.byte_budget) {
      full_ = true;
      return false;
    }
    seen_.insert(path);
    plan_.candidates.push_back(path);
    plan_.planned_bytes += *size;
    return true;
  }

 private:
  PrefetchPlan& plan_;
  const SizeLookup& sizes_;
  std::set<ObjectPath> seen_;
  bool full_ = false;
};

PrefetchPlan empty_plan(PrefetchStrategy s, std::uint64_t budget) {
  if (budget == 0) throw Error(ErrorCode::kInvalidArgument, "prefetch budget must be > 0");
  PrefetchPlan p;
  p.strategy = s;
  p.byte_budget = budget;
  return p;
}

// Newest records first: recent sessions are the likeliest to be replayed.
void offer_records(Filler& fill, std::vector<SessionRecord> records) {
  std::reverse(records.begin(), records.end());
  for (const auto& r : records) {
    if (!fill.offer(r.object_path)) return;
  }
}

}  // namespace

void to_json(nlohmann::json& j, const AccessLogEntry& e) {
  j = nlohmann::json{{"t", e.timestamp},
                     {"object_path", e.object_path.str()},
                     {"group", e.group},
                     {"labels", e.labels},
                     {"location", e.location}};
}

void from_json(const nlohmann::json& j, AccessLogEntry& e) {
  e.timestamp = j.at("t").get<std::int64_t>();
  e.object_path = ObjectPath(j.at("object_path").get<std::string>());
  e.group = j.at("group").get<std::string>();
  e.labels = j.value("labels", std::set<std::string>{});
  e.location = j.value("location", std::string{});
}

void AccessLog::record_access(AccessLogEntry entry) {
  if (!entries_.empty() && entry.timestamp < entries_.back().timestamp) {
    throw Error(ErrorCode::kTimeRegression,
                "access at " + std::to_string(entry.timestamp) + " precedes last entry at " +
                    std::to_string(entries_.back().timestamp));
  }
  ++group_counts_[entry.group];
  ++group_objects_[entry.group][entry.object_path];
  for (const auto& l : entry.labels) ++label_counts_[l];
  if (!entry.location.empty()) ++location_counts_[entry.location];
  entries_.push_back(std::move(entry));
}

std::pair<std::size_t, std::size_t> AccessLog::window(std::int64_t start, std::int64_t end) const {
  auto by_time = [](const AccessLogEntry& e, std::int64_t t) { return e.timestamp < t; };
  auto lo = std::lower_bound(entries_.begin(), entries_.end(), start, by_time);
  auto hi = std::lower_bound(lo, entries_.end(), end, by_time);
  return {static_cast<std::size_t>(lo - entries_.begin()),
          static_cast<std::size_t>(hi - entries_.begin())};
}

const std::map<ObjectPath, std::uint64_t>& AccessLog::object_counts(const std::string& group) const {
  static const std::map<ObjectPath, std::uint64_t> kEmpty;
  auto it = group_objects_.find(group);
  return it == group_objects_.end() ? kEmpty : it->second;
}

void AccessLog::export_jsonl(std::ostream& out) const {
  for (const auto& e : entries_) out << nlohmann::json(e).dump() << '\n';
}

AccessLog AccessLog::import_jsonl(std::istream& in) {
  AccessLog log;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      log.record_access(nlohmann::json::parse(line).get<AccessLogEntry>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, "access log line " + std::to_string(n) + ": " + e.what());
    }
  }
  return log;
}

int period_index(std::int64_t t) {
  const std::int64_t into_day = t - floor_div(t, kSecondsPerDay) * kSecondsPerDay;
  return static_cast<int>(into_day / kSecondsPerPeriod);
}

PeriodWindow previous_day_window(std::int64_t now) {
  const std::int64_t day_start = floor_div(now, kSecondsPerDay) * kSecondsPerDay;
  const std::int64_t start = day_start - kSecondsPerDay + period_index(now) * kSecondsPerPeriod;
  return {start, start + kSecondsPerPeriod};
}

std::string to_string(PrefetchStrategy s) {
  switch (s) {
    case PrefetchStrategy::kNone: return "none";
    case PrefetchStrategy::kMostRequested: return "most-requested";
    case PrefetchStrategy::kTimePeriod: return "time-period";
    case PrefetchStrategy::kLabelHot: return "label-hot";
    case PrefetchStrategy::kLocationHot: return "location-hot";
  }
  return "?";
}

PrefetchStrategy prefetch_strategy_from_string(std::string_view name) {
  for (auto s : {PrefetchStrategy::kNone, PrefetchStrategy::kMostRequested,
                 PrefetchStrategy::kTimePeriod, PrefetchStrategy::kLabelHot,
                 PrefetchStrategy::kLocationHot}) {
    if (to_string(s) == name) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown prefetch strategy: " + std::string(name));
}

void to_json(nlohmann::json& j, const PrefetchPlan& p) {
  std::vector<std::string> paths;
  for (const auto& c : p.candidates) paths.push_back(c.str());
  j = nlohmann::json{{"strategy", to_string(p.strategy)},
                     {"byte_budget", p.byte_budget},
                     {"planned_bytes", p.planned_bytes},
                     {"candidates", paths}};
}

SizeLookup sizes_from(std::map<ObjectPath, std::uint64_t> sizes) {
  return [sizes = std::move(sizes)](const ObjectPath& p) -> std::optional<std::uint64_t> {
    auto it = sizes.find(p);
    if (it == sizes.end()) return std::nullopt;
    return it->second;
  };
}

SizeLookup sizes_from(const TieredStore& store) {
  return [&store](const ObjectPath& p) -> std::optional<std::uint64_t> {
    const BlockId id(p.str());
    if (!store.contains(id)) return std::nullopt;
    return store.block_size(id);
  };
}

PrefetchPlan plan_most_requested(const AccessLog& log, std::uint64_t byte_budget,
                                 const SizeLookup& sizes) {
  auto plan = empty_plan(PrefetchStrategy::kMostRequested, byte_budget);
  Filler fill(plan, sizes);
  for (const auto& group : ranked(log.group_counts())) {
    for (const auto& path : ranked(log.object_counts(group))) {
      if (!fill.offer(path)) return plan;
    }
  }
  return plan;
}

PrefetchPlan plan_time_period(const AccessLog& log, std::int64_t now, std::uint64_t byte_budget,
                              const SizeLookup& sizes) {
  auto plan = empty_plan(PrefetchStrategy::kTimePeriod, byte_budget);
  const auto w = previous_day_window(now);
  const auto [lo, hi] = log.window(w.start, w.end);
  std::map<std::string, std::uint64_t> groups;
  for (std::size_t i = lo; i < hi; ++i) ++groups[log.entries()[i].group];
  // The window picks the group; one day of reads is too thin to rank that
  // group's objects, so they go by their all-time counts.
  Filler fill(plan, sizes);
  for (const auto& group : ranked(groups)) {
    for (const auto& path : ranked(log.object_counts(group))) {
      if (!fill.offer(path)) return plan;
    }
  }
  return plan;
}

PrefetchPlan plan_label_hot(const AccessLog& log, const MetaStore& meta,
                            std::uint64_t byte_budget, const SizeLookup& sizes) {
  auto plan = empty_plan(PrefetchStrategy::kLabelHot, byte_budget);
  Filler fill(plan, sizes);
  for (const auto& label : ranked(log.label_counts())) {
    QueryPredicate p;
    p.labels_any = std::set<std::string>{label};
    offer_records(fill, meta.query(p));
  }
  return plan;
}

PrefetchPlan plan_location_hot(const AccessLog& log, const MetaStore& meta,
                               std::uint64_t byte_budget, const SizeLookup& sizes) {
  auto plan = empty_plan(PrefetchStrategy::kLocationHot, byte_budget);
  Filler fill(plan, sizes);
  for (const auto& location : ranked(log.location_counts())) {
    QueryPredicate p;
    p.location = location;
    offer_records(fill, meta.query(p));
  }
  return plan;
}

PrefetchPlan make_plan(PrefetchStrategy strategy, const AccessLog& log, const MetaStore& meta,
                       std::int64_t now, std::uint64_t byte_budget, const SizeLookup& sizes) {
  switch (strategy) {
    case PrefetchStrategy::kNone: return empty_plan(strategy, byte_budget);
    case PrefetchStrategy::kMostRequested: return plan_most_requested(log, byte_budget, sizes);
    case PrefetchStrategy::kTimePeriod: return plan_time_period(log, now, byte_budget, sizes);
    case PrefetchStrategy::kLabelHot: return plan_label_hot(log, meta, byte_budget, sizes);
    case PrefetchStrategy::kLocationHot: return plan_location_hot(log, meta, byte_budget, sizes);
  }
  return empty_plan(strategy, byte_budget);
}

PromotionReport execute_plan(const PrefetchPlan& plan, TieredStore& store, const IdleGate& gate,
                             std::optional<Level> target) {
  PromotionReport report;
  const auto levels = store.tier_levels();
  for (std::size_t i = 0; i < plan.candidates.size(); ++i) {
    if (!gate.open()) {
      report.deferred = plan.candidates.size() - i;
      break;
    }
    ++report.attempted;
    const BlockId id(plan.candidates[i].str());
    PromotionRecord rec;
    rec.block_id = id;
    if (!store.contains(id)) {
      rec.reason = "unknown block";
    } else {
      Level to = target.value_or(levels.front());
      if (!target) {
        const auto size = store.block_size(id);
        const Level here = store.locate(id).value_or(Level::kBackend);
        for (Level l : levels) {
          if (l >= here) break;
          if (store.free_space(l) >= size) {
            to = l;
            break;
          }
        }
      }
      rec = store.promote_block(id, to);
    }
    if (rec.promoted) {
      ++report.promoted;
      report.modeled_latency_ms += rec.modeled_latency_ms;
    } else {
      ++report.skipped;
    }
    report.records.push_back(std::move(rec));
  }
  return report;
}

}  // namespace robocloud
