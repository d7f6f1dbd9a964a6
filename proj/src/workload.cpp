#include "robocloud/workload.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "robocloud/error.hpp"
#include "robocloud/prefetch.hpp"
#include "robocloud/rng.hpp"

namespace robocloud {

namespace {

enum Stream : std::uint64_t { kHotStream = 1, kIngestStream = 2, kReadStream = 3, kQueryStream = 4 };

std::string user_name(int i) {
  std::string n = std::to_string(i);
  return "u" + std::string(n.size() < 3 ? 3 - n.size() : 0, '0') + n;
}

struct Ingested {
  std::int64_t available_at;  // ingest event time
  ObjectPath path;
  std::string session_id;
  std::int64_t start;
};

}  // namespace

void WorkloadConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (days < 0 || users < 0 || streams_per_user_per_day < 0 || reads_per_period < 0 ||
      queries_per_period < 0) {
    bad("workload counts must be >= 0");
  }
  if (avg_object_size == 0) bad("avg_object_size must be > 0");
  if (label_popularity < 0 || object_popularity < 0) bad("zipf exponents must be >= 0");
  if (period_locality < 0 || period_locality > 1) bad("period_locality outside [0,1]");
  if (hot_fraction < 0 || hot_fraction > 1) bad("hot_fraction outside [0,1]");
  const double mix[] = {query_mix.key_lookup, query_mix.label, query_mix.location, query_mix.time_range};
  double sum = 0;
  for (double m : mix) {
    if (m < 0) bad("query_mix fractions must be >= 0");
    sum += m;
  }
  if (std::abs(sum - 1.0) > 1e-9) bad("query_mix fractions must sum to 1");
  if (min_duration_s < 0 || max_duration_s < min_duration_s) bad("invalid duration range");
}

const std::vector<std::string>& default_locations() {
  static const std::vector<std::string> rooms{"bedroom", "living room", "kitchen", "bathroom",
                                              "hallway", "office",      "garage",  "garden"};
  return rooms;
}

VideoStream synthesize_stream(const StreamDescriptor& d) {
  VideoStream s;
  s.session_id = d.session_id;
  s.user_id = d.user_id;
  s.start_timestamp = d.start_timestamp;
  s.duration = d.duration_s;
  s.location = d.location;
  s.size_bytes = d.size_bytes;
  Rng rng(d.frame_seed);
  for (int i = 0; i <= d.duration_s; ++i) {
    std::uint64_t x = rng.next_u64();
    Blob bytes(8);
    for (auto& b : bytes) {
      b = static_cast<std::uint8_t>(x);
      x >>= 8;
    }
    s.frames.push_back({static_cast<double>(i), std::move(bytes)});
  }
  return s;
}

std::string to_string(TraceKind kind) {
  switch (kind) {
    case TraceKind::kIngest: return "ingest";
    case TraceKind::kQuery: return "query";
    case TraceKind::kRead: return "read";
  }
  return "?";
}

void to_json(nlohmann::json& j, const TraceEvent& e) {
  j = nlohmann::json{{"t", e.t}, {"kind", to_string(e.kind())}};
  if (const auto* s = std::get_if<StreamDescriptor>(&e.payload)) {
    j["stream"] = {{"session_id", s->session_id}, {"user_id", s->user_id},
                   {"start_timestamp", s->start_timestamp}, {"duration", s->duration_s},
                   {"location", s->location}, {"frame_seed", s->frame_seed},
                   {"size_bytes", s->size_bytes}};
  } else if (const auto* q = std::get_if<QueryPredicate>(&e.payload)) {
    j["predicate"] = *q;
  } else {
    j["object_path"] = std::get<ObjectPath>(e.payload).str();
  }
}

void from_json(const nlohmann::json& j, TraceEvent& e) {
  e.t = j.at("t").get<std::int64_t>();
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "ingest") {
    const auto& s = j.at("stream");
    StreamDescriptor d;
    d.session_id = s.at("session_id").get<std::string>();
    d.user_id = s.at("user_id").get<std::string>();
    d.start_timestamp = s.at("start_timestamp").get<std::int64_t>();
    d.duration_s = s.at("duration").get<int>();
    d.location = s.at("location").get<std::string>();
    d.frame_seed = s.at("frame_seed").get<std::uint64_t>();
    d.size_bytes = s.at("size_bytes").get<std::uint64_t>();
    e.payload = std::move(d);
  } else if (kind == "query") {
    e.payload = j.at("predicate").get<QueryPredicate>();
  } else if (kind == "read") {
    e.payload = ObjectPath(j.at("object_path").get<std::string>());
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown trace event kind: " + kind);
  }
}

std::vector<std::vector<std::string>> hot_groups(const WorkloadConfig& config) {
  config.validate();
  std::vector<std::vector<std::string>> hot(static_cast<std::size_t>(config.days));
  if (config.users == 0) return hot;
  Rng rng(mix_seed(config.seed, kHotStream));
  const auto users = static_cast<std::uint64_t>(config.users);
  std::vector<std::uint64_t> current(6);
  for (int d = 0; d < config.days; ++d) {
    for (std::size_t p = 0; p < 6; ++p) {
      if (d == 0) {
        current[p] = rng.below(users);
      } else if (!rng.bernoulli(config.period_locality) && users > 1) {
        // a different user, uniformly
        current[p] = (current[p] + 1 + rng.below(users - 1)) % users;
      }
      hot[static_cast<std::size_t>(d)].push_back(user_name(static_cast<int>(current[p])));
    }
  }
  return hot;
}

std::vector<TraceEvent> generate_workload(const WorkloadConfig& config) {
  config.validate();
  std::vector<TraceEvent> events;
  if (config.days == 0) return events;
  const auto hot = hot_groups(config);
  const auto& rooms = default_locations();
  const ZipfSampler room_zipf(rooms.size(), 1.0);

  // Ingests: streams recorded at uniform times through each day, available
  // to readers once the stream has ended.
  std::map<std::string, std::vector<Ingested>> by_user;
  std::vector<Ingested> all;
  Rng ing(mix_seed(config.seed, kIngestStream));
  for (int d = 0; d < config.days; ++d) {
    for (int u = 0; u < config.users; ++u) {
      const std::string user = user_name(u);
      std::vector<std::int64_t> starts;
      for (int i = 0; i < config.streams_per_user_per_day; ++i) {
        starts.push_back(kTraceEpoch + d * kSecondsPerDay +
                         static_cast<std::int64_t>(ing.below(kSecondsPerDay - config.max_duration_s)));
      }
      std::sort(starts.begin(), starts.end());
      for (int i = 0; i < config.streams_per_user_per_day; ++i) {
        StreamDescriptor s;
        s.user_id = user;
        s.session_id = user + "-d" + std::to_string(d) + "-s" + std::to_string(i);
        s.start_timestamp = starts[static_cast<std::size_t>(i)];
        s.duration_s = static_cast<int>(ing.between(config.min_duration_s, config.max_duration_s));
        s.location = rooms[(static_cast<std::size_t>(u) + room_zipf(ing)) % rooms.size()];
        s.frame_seed = ing.next_u64();
        s.size_bytes = config.avg_object_size;
        const std::int64_t t = s.start_timestamp + s.duration_s;
        VideoStream key;
        key.session_id = s.session_id;
        key.user_id = user;
        key.start_timestamp = s.start_timestamp;
        Ingested rec{t, object_path_for(key, kVideoPrefix), s.session_id, s.start_timestamp};
        by_user[user].push_back(rec);
        all.push_back(rec);
        events.push_back({t, std::move(s)});
      }
    }
  }
  for (auto& [_, v] : by_user) {
    std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.available_at < b.available_at; });
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.available_at < b.available_at; });
  auto available = [](const std::vector<Ingested>& v, std::int64_t t) {
    return static_cast<std::size_t>(
        std::lower_bound(v.begin(), v.end(), t, [](const Ingested& x, std::int64_t tt) { return x.available_at < tt; }) -
        v.begin());
  };

  std::map<std::size_t, ZipfSampler> object_zipf;
  auto zipf_for = [&](std::size_t n) -> const ZipfSampler& {
    auto it = object_zipf.find(n);
    if (it == object_zipf.end()) it = object_zipf.emplace(n, ZipfSampler(n, config.object_popularity)).first;
    return it->second;
  };
  const ZipfSampler label_zipf(default_vocabulary().size(), config.label_popularity);

  Rng rd(mix_seed(config.seed, kReadStream));
  Rng qr(mix_seed(config.seed, kQueryStream));
  for (int d = 0; d < config.days; ++d) {
    for (int p = 0; p < 6; ++p) {
      const std::int64_t start = kTraceEpoch + d * kSecondsPerDay + p * kSecondsPerPeriod;
      if (config.users > 0) {
        std::vector<std::int64_t> times;
        for (int i = 0; i < config.reads_per_period; ++i) {
          times.push_back(start + static_cast<std::int64_t>(rd.below(kSecondsPerPeriod)));
        }
        std::sort(times.begin(), times.end());
        for (std::int64_t t : times) {
          const bool to_hot = rd.bernoulli(config.hot_fraction);
          const std::string user = to_hot ? hot[static_cast<std::size_t>(d)][static_cast<std::size_t>(p)]
                                          : user_name(static_cast<int>(rd.below(static_cast<std::uint64_t>(config.users))));
          const auto& objs = by_user[user];
          const std::size_t n = available(objs, t);
          if (n == 0) continue;
          events.push_back({t, objs[zipf_for(n)(rd)].path});
        }
      }

      std::vector<std::int64_t> qtimes;
      for (int i = 0; i < config.queries_per_period; ++i) {
        qtimes.push_back(start + static_cast<std::int64_t>(qr.below(kSecondsPerPeriod)));
      }
      std::sort(qtimes.begin(), qtimes.end());
      const auto& mix = config.query_mix;
      for (std::int64_t t : qtimes) {
        const double u = qr.uniform01();
        QueryPredicate pred;
        const std::size_t n = available(all, t);
        if (u < mix.key_lookup && n > 0) {
          const auto& target = all[qr.below(n)];
          pred.session_id = target.session_id;
          pred.time_range = TimeRange{target.start, target.start};
        } else if (u < mix.key_lookup + mix.label) {
          pred.labels_any = std::set<std::string>{default_vocabulary()[label_zipf(qr)]};
        } else if (u < mix.key_lookup + mix.label + mix.location) {
          pred.location = rooms[room_zipf(qr)];
        } else {
          pred.time_range = TimeRange{t - 3600 * qr.between(1, 6), t};
        }
        events.push_back({t, std::move(pred)});
      }
    }
  }
  std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
  return events;
}

void write_trace(const std::vector<TraceEvent>& trace, std::ostream& out) {
  for (const auto& e : trace) out << nlohmann::json(e).dump() << '\n';
}

std::vector<TraceEvent> read_trace(std::istream& in) {
  std::vector<TraceEvent> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<TraceEvent>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidArgument, "trace line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "trace line " + std::to_string(n) + ": " + e.what());
    }
    if (out.size() > 1 && out.back().t < out[out.size() - 2].t) {
      throw Error(ErrorCode::kInvalidArgument, "trace line " + std::to_string(n) + ": events out of order");
    }
  }
  return out;
}

}  // namespace robocloud
