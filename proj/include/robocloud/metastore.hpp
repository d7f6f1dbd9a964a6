#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "robocloud/backend.hpp"

namespace robocloud {

// One row per recorded video session.
struct SessionRecord {
  std::string session_id;
  std::string user_id;
  std::int64_t timestamp = 0;  // seconds since epoch
  double duration = 0.0;       // seconds
  std::string location;
  std::set<std::string> labels;
  ObjectPath object_path;

  friend bool operator==(const SessionRecord&, const SessionRecord&) = default;
};

// Primary key; its ordering is the query result order.
struct RecordKey {
  std::int64_t timestamp = 0;
  std::string session_id;
  friend auto operator<=>(const RecordKey&, const RecordKey&) = default;
};

inline RecordKey key_of(const SessionRecord& r) { return {r.timestamp, r.session_id}; }

struct TimeRange {
  std::int64_t start = 0;
  std::int64_t end = 0;  // inclusive
  friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

// Conjunction of every field that is set.
struct QueryPredicate {
  std::optional<TimeRange> time_range;
  std::optional<std::string> location;
  std::optional<std::set<std::string>> labels_any;  // non-empty intersection
  std::optional<std::set<std::string>> labels_all;  // subset
  std::optional<std::string> session_id;
  std::optional<std::string> user_id;

  // Throws on an empty predicate or start > end.
  void validate() const;
  bool matches(const SessionRecord& r) const;
};

struct LabelStat {
  std::string label;
  std::uint64_t count = 0;
  friend bool operator==(const LabelStat&, const LabelStat&) = default;
};

struct StoredRow {
  SessionRecord record;
  double inclusion_probability = 1.0;  // < 1 when admitted by a sampler
};

void validate_record(const SessionRecord& r);

void to_json(nlohmann::json& j, const SessionRecord& r);
void from_json(const nlohmann::json& j, SessionRecord& r);
void to_json(nlohmann::json& j, const QueryPredicate& p);
void from_json(const nlohmann::json& j, QueryPredicate& p);

// Metadata store with a sorted time index (the primary map), a location hash
// index and an inverted label index. Readers share a lock; writers exclude
// them, so every query sees a consistent snapshot.
class MetaStore {
 public:
  RecordKey put_record(const SessionRecord& record, double inclusion_probability = 1.0);
  SessionRecord get_by_key(const std::string& session_id, std::int64_t timestamp) const;
  bool contains(const RecordKey& key) const;

  std::vector<SessionRecord> query(const QueryPredicate& predicate) const;
  std::uint64_t count(const QueryPredicate& predicate) const;

  std::vector<LabelStat> top_labels(const std::optional<std::string>& location,
                                    const std::optional<TimeRange>& time_range,
                                    std::size_t k) const;

  std::size_t size() const;
  // Every row in key order together with its inclusion probability.
  std::vector<StoredRow> rows() const;

  // Postings per index, for consistency checks.
  std::set<RecordKey> label_postings(const std::string& label) const;
  std::set<RecordKey> location_postings(const std::string& location) const;
  std::vector<std::string> labels() const;

  void export_jsonl(std::ostream& out) const;
  // Returns the number of records imported.
  std::size_t import_jsonl(std::istream& in);

 private:
  template <typename Fn>
  void for_each_candidate(const QueryPredicate& p, Fn&& fn) const;

  mutable std::shared_mutex mu_;
  std::map<RecordKey, StoredRow> rows_;
  std::unordered_map<std::string, std::set<RecordKey>> by_location_;
  std::unordered_map<std::string, std::set<RecordKey>> by_label_;
  std::unordered_map<std::string, std::set<RecordKey>> by_session_;
  std::unordered_map<std::string, std::set<RecordKey>> by_user_;
};

}  // namespace robocloud
