#include "robocloud/replay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <variant>

#include "robocloud/error.hpp"

namespace robocloud {

namespace {

using Cell = std::variant<std::string, std::uint64_t, double>;

struct Column {
  std::string name;
  std::function<Cell(const RunMetrics&)> get;
  std::function<void(RunMetrics&, const nlohmann::json&)> set;
};

template <typename T>
Column col(std::string name, T RunMetrics::*field) {
  return {name, [field](const RunMetrics& m) -> Cell { return m.*field; },
          [field](RunMetrics& m, const nlohmann::json& j) { m.*field = j.get<T>(); }};
}

Column stat(std::string name, LatencyStats RunMetrics::*field, double LatencyStats::*part) {
  return {name, [=](const RunMetrics& m) -> Cell { return m.*field.*part; },
          [=](RunMetrics& m, const nlohmann::json& j) { m.*field.*part = j.get<double>(); }};
}

const std::vector<Column>& columns() {
  static const std::vector<Column> cols{
      col("strategy", &RunMetrics::strategy),
      col("allocator", &RunMetrics::allocator),
      col("events", &RunMetrics::events),
      col("ingests", &RunMetrics::ingests),
      col("stored", &RunMetrics::stored),
      col("rejected_pre_learning", &RunMetrics::rejected_pre_learning),
      col("rejected_pre_memorization", &RunMetrics::rejected_pre_memorization),
      col("skipped_extractor", &RunMetrics::skipped_extractor),
      col("reads", &RunMetrics::reads),
      col("hits", &RunMetrics::hits),
      col("misses", &RunMetrics::misses),
      col("unresolved_reads", &RunMetrics::unresolved_reads),
      col("queries", &RunMetrics::queries),
      col("hit_rate", &RunMetrics::hit_rate),
      stat("write_latency_mean_ms", &RunMetrics::write_latency, &LatencyStats::mean),
      stat("write_latency_p95_ms", &RunMetrics::write_latency, &LatencyStats::p95),
      stat("read_latency_mean_ms", &RunMetrics::read_latency, &LatencyStats::mean),
      stat("read_latency_p95_ms", &RunMetrics::read_latency, &LatencyStats::p95),
      stat("query_latency_mean_ms", &RunMetrics::query_latency, &LatencyStats::mean),
      stat("query_latency_p95_ms", &RunMetrics::query_latency, &LatencyStats::p95),
      col("moves_total", &RunMetrics::moves_total),
      col("promotions", &RunMetrics::promotions),
      col("prefetch_attempted", &RunMetrics::prefetch_attempted),
      col("prefetch_promoted", &RunMetrics::prefetch_promoted),
      col("prefetch_skipped", &RunMetrics::prefetch_skipped),
      col("prefetch_deferred", &RunMetrics::prefetch_deferred),
      col("metastore_records", &RunMetrics::metastore_records),
  };
  return cols;
}

std::string csv_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) {
    if (s->find_first_of(",\"\n") == std::string::npos) return *s;
    std::string q = "\"";
    for (char ch : *s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
    return q + "\"";
  }
  if (const auto* u = std::get_if<std::uint64_t>(&c)) return std::to_string(*u);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", std::get<double>(c));
  return buf;
}

std::int64_t floor_to_period(std::int64_t t) {
  std::int64_t q = t / kSecondsPerPeriod;
  if (t % kSecondsPerPeriod != 0 && t < 0) --q;
  return q * kSecondsPerPeriod;
}

struct Known {
  std::string user;
  std::set<std::string> labels;
  std::string location;
};

}  // namespace

void SystemConfig::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (tiers.empty()) bad("system needs at least one tier");
  if (!(prefetch_fraction > 0.0 && prefetch_fraction <= 1.0)) bad("prefetch_fraction outside (0,1]");
  if (!(load_threshold > 0.0)) bad("load_threshold must be > 0");
  if (gate_window_s < 0) bad("gate_window_s must be >= 0");
  if (query_overhead_ms < 0 || query_per_row_ms < 0) bad("query cost must be >= 0");
  if (strategies.empty()) bad("no prefetch strategy selected");
  frames.validate();
  if (labels_per_frame < 1) bad("labels_per_frame must be >= 1");
  if (pre_learning) make_pre_learning_sampler(*pre_learning);
  if (pre_memorization) make_pre_memorization_sampler(*pre_memorization);
}

LatencyStats LatencyStats::of(std::vector<double> samples) {
  LatencyStats s;
  if (samples.empty()) return s;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
  s.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

const RunMetrics* MetricsReport::find(std::string_view strategy) const {
  for (const auto& r : runs) {
    if (r.strategy == strategy) return &r;
  }
  return nullptr;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& c : columns()) n.push_back(c.name);
    return n;
  }();
  return names;
}

std::string to_csv(const MetricsReport& report) {
  std::string out;
  const auto& cols = columns();
  for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i].name;
  out += '\n';
  for (const auto& run : report.runs) {
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + csv_cell(cols[i].get(run));
    out += '\n';
  }
  return out;
}

std::string to_json_text(const MetricsReport& report) {
  nlohmann::ordered_json j;
  j["columns"] = report_columns();
  j["runs"] = nlohmann::ordered_json::array();
  for (const auto& run : report.runs) {
    nlohmann::ordered_json row;
    for (const auto& c : columns()) {
      std::visit([&](const auto& v) { row[c.name] = v; }, c.get(run));
    }
    j["runs"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  try {
    for (const auto& row : j.at("runs")) {
      RunMetrics m;
      for (const auto& c : columns()) c.set(m, row.at(c.name));
      r.runs.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "malformed report: " + std::string(e.what()));
  }
  return r;
}

void export_report(const MetricsReport& report, const std::string& format, const std::string& path) {
  std::string text;
  if (format == "csv") {
    text = to_csv(report);
  } else if (format == "json") {
    text = to_json_text(report);
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown report format: " + format);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write report to " + path);
  out << text;
  out.flush();
  if (!out) throw Error(ErrorCode::kInvalidArgument, "failed writing report to " + path);
}

RunMetrics replay(const std::vector<TraceEvent>& trace, const SystemConfig& system,
                  PrefetchStrategy strategy) {
  system.validate();
  RunMetrics m;
  m.strategy = to_string(strategy);
  m.allocator = to_string(system.allocator);

  MountTable mounts;
  mounts.mount(ObjectPath(kVideoPrefix), system.backend);
  StoreOptions opts;
  opts.tiers = system.tiers;
  opts.allocator = system.allocator;
  opts.evictor = system.evictor;
  opts.backend_cost = system.backend_cost;
  TieredStore store(opts, mounts);
  MetaStore meta;
  AccessLog log;

  ExtractorConfig ec;
  ec.vocabulary = default_vocabulary();
  ec.labels_per_frame = system.labels_per_frame;
  SyntheticHashExtractor extractor(ec);
  PipelineOptions po;
  po.frames = system.frames;
  po.path_prefix = kVideoPrefix;
  if (system.pre_learning) po.pre_learning = make_pre_learning_sampler(*system.pre_learning);
  if (system.pre_memorization) po.pre_memorization = make_pre_memorization_sampler(*system.pre_memorization);

  const Level top = system.tiers.front().name;
  const std::uint64_t top_capacity = system.tiers.front().capacity;
  const auto budget = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::floor(static_cast<double>(top_capacity) * system.prefetch_fraction)));
  const auto sizes = sizes_from(store);

  std::unordered_map<std::string, Known> known;
  std::vector<double> writes, reads, queries;
  std::deque<std::int64_t> recent;  // foreground event times inside the gate window

  auto maintenance = [&](std::int64_t now) {
    store.reclaim(top, top_capacity);
    if (strategy == PrefetchStrategy::kNone) return;
    while (!recent.empty() && recent.front() < now - system.gate_window_s) recent.pop_front();
    const auto load = static_cast<double>(recent.size());
    const IdleGate gate{[load] { return load; }, system.load_threshold};
    const auto plan = make_plan(strategy, log, meta, now, budget, sizes);
    const auto report = execute_plan(plan, store, gate);
    m.prefetch_attempted += report.attempted;
    m.prefetch_promoted += report.promoted;
    m.prefetch_skipped += report.skipped;
    m.prefetch_deferred += report.deferred;
  };

  std::int64_t next_boundary = trace.empty() ? 0 : floor_to_period(trace.front().t);
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& e = trace[i];
    const std::string where = "event " + std::to_string(i) + " (t=" + std::to_string(e.t) + ")";
    if (i > 0 && e.t < trace[i - 1].t) {
      throw Error(ErrorCode::kInvalidArgument, where + ": trace not sorted by time");
    }
    while (e.t >= next_boundary) {
      maintenance(next_boundary);
      next_boundary += kSecondsPerPeriod;
    }
    recent.push_back(e.t);
    ++m.events;
    try {
      if (const auto* d = std::get_if<StreamDescriptor>(&e.payload)) {
        ++m.ingests;
        const auto r = process_stream(synthesize_stream(*d), po, extractor, store, meta);
        switch (r.status) {
          case ProcessStatus::kStored:
            ++m.stored;
            writes.push_back(r.write->modeled_latency_ms);
            known[r.record->object_path.str()] = {r.record->user_id, r.record->labels, r.record->location};
            break;
          case ProcessStatus::kSkippedPreLearning: ++m.rejected_pre_learning; break;
          case ProcessStatus::kSkippedPreMemorization: ++m.rejected_pre_memorization; break;
          case ProcessStatus::kSkippedExtractor: ++m.skipped_extractor; break;
        }
      } else if (const auto* q = std::get_if<QueryPredicate>(&e.payload)) {
        ++m.queries;
        const auto rows = meta.query(*q);
        queries.push_back(system.query_overhead_ms +
                          system.query_per_row_ms * static_cast<double>(rows.size()));
      } else {
        const auto& path = std::get<ObjectPath>(e.payload);
        auto it = known.find(path.str());
        if (it == known.end()) {
          ++m.unresolved_reads;
          continue;
        }
        ++m.reads;
        const auto [blob, receipt] = store.read_block(BlockId(path.str()));
        receipt.hit ? ++m.hits : ++m.misses;
        reads.push_back(receipt.modeled_latency_ms);
        log.record_access({e.t, path, it->second.user, it->second.labels, it->second.location});
      }
    } catch (const Error& err) {
      throw Error(err.code(), where + ": " + err.what());
    }
  }

  store.check_invariants();
  const auto sm = store.metrics_snapshot();
  m.hit_rate = m.reads == 0 ? 0.0 : static_cast<double>(m.hits) / static_cast<double>(m.reads);
  m.write_latency = LatencyStats::of(std::move(writes));
  m.read_latency = LatencyStats::of(std::move(reads));
  m.query_latency = LatencyStats::of(std::move(queries));
  m.moves_total = sm.total_moves;
  m.promotions = sm.promotions;
  m.metastore_records = meta.size();
  return m;
}

MetricsReport replay_all(const std::vector<TraceEvent>& trace, const SystemConfig& system) {
  MetricsReport r;
  for (auto s : system.strategies) r.runs.push_back(replay(trace, system, s));
  return r;
}

MetricsReport simulate(const SimulationConfig& config) {
  return replay_all(generate_workload(config.workload), config.system);
}

}  // namespace robocloud
