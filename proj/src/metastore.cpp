#include "robocloud/metastore.hpp"

#include <algorithm>
#include <istream>
#include <mutex>
#include <ostream>

#include "robocloud/error.hpp"

namespace robocloud {

using nlohmann::json;

void validate_record(const SessionRecord& r) {
  if (r.session_id.empty()) throw Error(ErrorCode::kInvalidArgument, "empty session_id");
  if (r.location.empty()) throw Error(ErrorCode::kInvalidArgument, "empty location");
  if (!(r.duration >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative duration");
  if (r.object_path.is_root()) {
    throw Error(ErrorCode::kInvalidArgument, "record has no object_path");
  }
  for (const auto& l : r.labels) {
    if (l.empty()) throw Error(ErrorCode::kInvalidArgument, "empty label");
  }
}

void QueryPredicate::validate() const {
  if (!time_range && !location && !labels_any && !labels_all && !session_id && !user_id) {
    throw Error(ErrorCode::kInvalidArgument, "predicate sets no field");
  }
  if (time_range && time_range->start > time_range->end) {
    throw Error(ErrorCode::kInvalidArgument, "time range start > end");
  }
}

bool QueryPredicate::matches(const SessionRecord& r) const {
  if (time_range && (r.timestamp < time_range->start || r.timestamp > time_range->end)) {
    return false;
  }
  if (location && r.location != *location) return false;
  if (session_id && r.session_id != *session_id) return false;
  if (user_id && r.user_id != *user_id) return false;
  if (labels_all) {
    for (const auto& l : *labels_all) {
      if (!r.labels.contains(l)) return false;
    }
  }
  if (labels_any) {
    bool any = false;
    for (const auto& l : *labels_any) {
      if (r.labels.contains(l)) {
        any = true;
        break;
      }
    }
    if (!any) return false;
  }
  return true;
}

void to_json(json& j, const SessionRecord& r) {
  j = json{{"session_id", r.session_id}, {"user_id", r.user_id},
           {"timestamp", r.timestamp},   {"duration", r.duration},
           {"location", r.location},     {"labels", r.labels},
           {"object_path", r.object_path.str()}};
}

void from_json(const json& j, SessionRecord& r) {
  j.at("session_id").get_to(r.session_id);
  j.at("user_id").get_to(r.user_id);
  j.at("timestamp").get_to(r.timestamp);
  j.at("duration").get_to(r.duration);
  j.at("location").get_to(r.location);
  r.labels.clear();
  for (const auto& l : j.at("labels")) r.labels.insert(l.get<std::string>());
  r.object_path = ObjectPath(j.at("object_path").get<std::string>());
}

void to_json(json& j, const QueryPredicate& p) {
  j = json::object();
  if (p.time_range) j["time_range"] = {p.time_range->start, p.time_range->end};
  if (p.location) j["location"] = *p.location;
  if (p.labels_any) j["labels_any"] = *p.labels_any;
  if (p.labels_all) j["labels_all"] = *p.labels_all;
  if (p.session_id) j["session_id"] = *p.session_id;
  if (p.user_id) j["user_id"] = *p.user_id;
}

void from_json(const json& j, QueryPredicate& p) {
  p = QueryPredicate{};
  if (j.contains("time_range")) {
    const auto& tr = j.at("time_range");
    if (!tr.is_array() || tr.size() != 2) {
      throw Error(ErrorCode::kInvalidArgument, "time_range must be [start, end]");
    }
    p.time_range = TimeRange{tr[0].get<std::int64_t>(), tr[1].get<std::int64_t>()};
  }
  if (j.contains("location")) p.location = j.at("location").get<std::string>();
  if (j.contains("labels_any")) p.labels_any = j.at("labels_any").get<std::set<std::string>>();
  if (j.contains("labels_all")) p.labels_all = j.at("labels_all").get<std::set<std::string>>();
  if (j.contains("session_id")) p.session_id = j.at("session_id").get<std::string>();
  if (j.contains("user_id")) p.user_id = j.at("user_id").get<std::string>();
}

RecordKey MetaStore::put_record(const SessionRecord& record, double inclusion_probability) {
  validate_record(record);
  if (!(inclusion_probability > 0.0 && inclusion_probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "inclusion probability outside (0,1]");
  }
  RecordKey key = key_of(record);
  std::unique_lock lock(mu_);
  if (rows_.contains(key)) {
    throw Error(ErrorCode::kAlreadyExists,
                "duplicate record key: " + key.session_id + "@" + std::to_string(key.timestamp));
  }
  rows_.emplace(key, StoredRow{record, inclusion_probability});
  by_location_[record.location].insert(key);
  by_session_[record.session_id].insert(key);
  by_user_[record.user_id].insert(key);
  for (const auto& l : record.labels) by_label_[l].insert(key);
  return key;
}

SessionRecord MetaStore::get_by_key(const std::string& session_id,
                                    std::int64_t timestamp) const {
  std::shared_lock lock(mu_);
  auto it = rows_.find(RecordKey{timestamp, session_id});
  if (it == rows_.end()) {
    throw Error(ErrorCode::kNotFound,
                "no record " + session_id + "@" + std::to_string(timestamp));
  }
  return it->second.record;
}

bool MetaStore::contains(const RecordKey& key) const {
  std::shared_lock lock(mu_);
  return rows_.contains(key);
}

// Drives fn over the smallest index posting list that the predicate
// constrains, in key order. Caller holds the lock and filters with matches().
template <typename Fn>
void MetaStore::for_each_candidate(const QueryPredicate& p, Fn&& fn) const {
  static const std::set<RecordKey> kEmpty;
  auto postings = [&](const auto& index, const std::string& value) -> const std::set<RecordKey>& {
    auto it = index.find(value);
    return it == index.end() ? kEmpty : it->second;
  };

  const std::set<RecordKey>* best = nullptr;
  auto consider = [&](const std::set<RecordKey>& s) {
    if (!best || s.size() < best->size()) best = &s;
  };
  if (p.session_id) consider(postings(by_session_, *p.session_id));
  if (p.user_id) consider(postings(by_user_, *p.user_id));
  if (p.location) consider(postings(by_location_, *p.location));
  if (p.labels_all) {
    for (const auto& l : *p.labels_all) consider(postings(by_label_, l));
  }

  std::set<RecordKey> any_union;
  if (p.labels_any) {
    for (const auto& l : *p.labels_any) {
      const auto& s = postings(by_label_, l);
      any_union.insert(s.begin(), s.end());
    }
    consider(any_union);
  }

  auto range_begin = rows_.begin(), range_end = rows_.end();
  std::size_t range_size = rows_.size();
  if (p.time_range) {
    range_begin = rows_.lower_bound(RecordKey{p.time_range->start, ""});
    range_end = p.time_range->end == INT64_MAX
                    ? rows_.end()
                    : rows_.lower_bound(RecordKey{p.time_range->end + 1, ""});
    range_size = static_cast<std::size_t>(std::distance(range_begin, range_end));
  }

  if (best && best->size() <= range_size) {
    for (const auto& key : *best) {
      const auto& row = rows_.at(key);
      if (p.matches(row.record)) fn(row);
    }
  } else {
    for (auto it = range_begin; it != range_end; ++it) {
      if (p.matches(it->second.record)) fn(it->second);
    }
  }
}

std::vector<SessionRecord> MetaStore::query(const QueryPredicate& predicate) const {
  predicate.validate();
  std::shared_lock lock(mu_);
  std::vector<SessionRecord> out;
  for_each_candidate(predicate, [&](const StoredRow& row) { out.push_back(row.record); });
  return out;
}

std::uint64_t MetaStore::count(const QueryPredicate& predicate) const {
  predicate.validate();
  std::shared_lock lock(mu_);
  std::uint64_t n = 0;
  for_each_candidate(predicate, [&](const StoredRow&) { ++n; });
  return n;
}

std::vector<LabelStat> MetaStore::top_labels(const std::optional<std::string>& location,
                                             const std::optional<TimeRange>& time_range,
                                             std::size_t k) const {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  QueryPredicate p;
  p.location = location;
  p.time_range = time_range;
  if (time_range && time_range->start > time_range->end) p.validate();

  std::map<std::string, std::uint64_t> counts;
  std::shared_lock lock(mu_);
  auto tally = [&](const StoredRow& row) {
    for (const auto& l : row.record.labels) ++counts[l];
  };
  if (location || time_range) {
    for_each_candidate(p, tally);
  } else {
    for (const auto& [_, row] : rows_) tally(row);
  }
  lock.unlock();

  std::vector<LabelStat> stats;
  for (const auto& [label, n] : counts) stats.push_back({label, n});
  // counts iterates labels ascending, so a stable sort keeps ties lexicographic.
  std::stable_sort(stats.begin(), stats.end(),
                   [](const LabelStat& a, const LabelStat& b) { return a.count > b.count; });
  if (stats.size() > k) stats.resize(k);
  return stats;
}

std::size_t MetaStore::size() const {
  std::shared_lock lock(mu_);
  return rows_.size();
}

std::vector<StoredRow> MetaStore::rows() const {
  std::shared_lock lock(mu_);
  std::vector<StoredRow> out;
  out.reserve(rows_.size());
  for (const auto& [_, row] : rows_) out.push_back(row);
  return out;
}

std::set<RecordKey> MetaStore::label_postings(const std::string& label) const {
  std::shared_lock lock(mu_);
  auto it = by_label_.find(label);
  return it == by_label_.end() ? std::set<RecordKey>{} : it->second;
}

std::set<RecordKey> MetaStore::location_postings(const std::string& location) const {
  std::shared_lock lock(mu_);
  auto it = by_location_.find(location);
  return it == by_location_.end() ? std::set<RecordKey>{} : it->second;
}

std::vector<std::string> MetaStore::labels() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  for (const auto& [l, _] : by_label_) out.push_back(l);
  std::sort(out.begin(), out.end());
  return out;
}

void MetaStore::export_jsonl(std::ostream& out) const {
  std::shared_lock lock(mu_);
  for (const auto& [_, row] : rows_) out << json(row.record).dump() << '\n';
}

std::size_t MetaStore::import_jsonl(std::istream& in) {
  std::string line;
  std::size_t n = 0, lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SessionRecord r;
    try {
      r = json::parse(line).get<SessionRecord>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument,
                  "bad record on line " + std::to_string(lineno) + ": " + e.what());
    }
    put_record(r);
    ++n;
  }
  return n;
}

}  // namespace robocloud
