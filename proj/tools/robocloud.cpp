// robocloud: command-line front end for the storage, metadata and simulation
// library. Every subcommand writes JSON (or CSV) to stdout unless --out is set.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "robocloud/bench.hpp"
#include "robocloud/capacity.hpp"
#include "robocloud/config.hpp"
#include "robocloud/error.hpp"
#include "robocloud/learning.hpp"
#include "robocloud/metastore.hpp"
#include "robocloud/reduction.hpp"
#include "robocloud/replay.hpp"
#include "robocloud/workload.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace robocloud;

namespace {

// State directory layout shared by ingest/query/approx.
fs::path meta_file(const fs::path& state) { return state / "metastore.jsonl"; }
fs::path objects_dir(const fs::path& state) { return state / "objects"; }

void load_meta(const fs::path& state, MetaStore& meta) {
  std::ifstream in(meta_file(state));
  if (in) meta.import_jsonl(in);
}

void save_meta(const fs::path& state, const MetaStore& meta) {
  fs::create_directories(state);
  const auto tmp = meta_file(state).string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + tmp);
    meta.export_jsonl(out);
  }
  fs::rename(tmp, meta_file(state));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Accepts inline JSON or @path.
QueryPredicate parse_predicate(const std::string& arg) {
  const std::string text = (!arg.empty() && arg[0] == '@') ? slurp(arg.substr(1)) : arg;
  try {
    return json::parse(text).get<QueryPredicate>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("predicate: ") + e.what());
  }
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + out_path);
  out << text;
}

SimulationConfig config_or_default(const std::string& path) {
  return path.empty() ? SimulationConfig{} : load_simulation_config(path);
}

json saturation_json(const SaturationResult& r) {
  return json{{"allocator", to_string(r.allocator)},
              {"writes", r.writes},
              {"mean_latency_ms", r.mean_latency_ms},
              {"p95_latency_ms", r.p95_latency_ms},
              {"total_moves", r.total_moves}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robocloud: tiered video storage, metadata recall and workload simulation"};
  app.require_subcommand(1);

  // ingest
  std::string state = "robocloud-state";
  std::string stream_file;
  std::string extractor_kind = "synthetic-hash";
  std::string endpoint;
  std::string on_failure = "abort";
  double frame_interval = 2.0;
  std::size_t labels_per_frame = 3;
  auto* ingest = app.add_subcommand("ingest", "Run a stream file through the learning pipeline and store it");
  ingest->add_option("--state", state, "State directory (metastore and objects)");
  ingest->add_option("stream", stream_file, "Stream file (JSON Lines header plus frame list)")->required();
  ingest->add_option("--extractor", extractor_kind, "synthetic-hash or external-endpoint");
  ingest->add_option("--endpoint", endpoint, "Label endpoint URL for external-endpoint");
  ingest->add_option("--on-extractor-failure", on_failure, "abort or skip")
      ->check(CLI::IsMember({"abort", "skip"}));
  ingest->add_option("--frame-interval", frame_interval, "Seconds between sampled frames");
  ingest->add_option("--labels-per-frame", labels_per_frame);

  // query
  std::string predicate_arg;
  auto* query = app.add_subcommand("query", "Exact recall query; prints matching records as JSON Lines");
  query->add_option("--state", state, "State directory");
  query->add_option("predicate", predicate_arg, "Predicate JSON, or @file")->required();

  // approx
  double q = 0.1;
  std::uint64_t seed = 42;
  auto* approx = app.add_subcommand("approx", "Approximate COUNT with a 95% interval");
  approx->add_option("--state", state, "State directory");
  approx->add_option("predicate", predicate_arg, "Predicate JSON, or @file")->required();
  approx->add_option("--q", q, "Online sampling rate in (0,1]");
  approx->add_option("--seed", seed);

  // simulate
  std::string config_path;
  std::string format = "csv";
  std::string out_path;
  std::string trace_in;
  std::string trace_out;
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate (or load) a trace and replay it per strategy");
  simulate_cmd->add_option("--config", config_path, "YAML simulation config");
  simulate_cmd->add_option("--format", format)->check(CLI::IsMember({"csv", "json"}));
  simulate_cmd->add_option("--out", out_path, "Report path (default stdout)");
  simulate_cmd->add_option("--trace", trace_in, "Replay this JSON Lines trace instead of generating one");
  simulate_cmd->add_option("--write-trace", trace_out, "Also save the generated trace");

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Write the generated workload trace as JSON Lines");
  trace_cmd->add_option("--config", config_path, "YAML simulation config");
  trace_cmd->add_option("--out", out_path);

  // plan
  std::string inputs_path;
  CapacityInputs ci;
  auto* plan = app.add_subcommand("plan", "Capacity plan for a deployment");
  plan->add_option("--inputs", inputs_path, "JSON file with capacity inputs; flags override it");
  auto* o_machines = plan->add_option("--machines", ci.machines);
  auto* o_mem = plan->add_option("--mem-per-machine", ci.mem_per_machine, "bytes");
  auto* o_hdd = plan->add_option("--hdd-per-machine", ci.hdd_per_machine, "bytes");
  auto* o_file = plan->add_option("--avg-file", ci.avg_file, "bytes");
  auto* o_lat = plan->add_option("--per-image-latency", ci.per_image_latency_s, "seconds");
  auto* o_int = plan->add_option("--frame-interval", ci.frame_interval_s, "seconds");
  auto* o_util = plan->add_option("--utilization", ci.utilization);
  auto* o_qps = plan->add_option("--queries-per-server", ci.queries_per_server);
  auto* o_conc = plan->add_option("--concurrency-factor", ci.concurrency_factor);

  // bench-alloc
  SaturationOptions sat;
  auto* bench_alloc = app.add_subcommand("bench-alloc", "Saturation write script, cascade vs direct write");
  bench_alloc->add_option("--writes", sat.writes);
  bench_alloc->add_option("--seed", sat.seed);
  bench_alloc->add_option("--avg-size", sat.avg_size, "bytes");

  // bench-prefetch
  auto* bench_prefetch = app.add_subcommand("bench-prefetch", "Hit rate per prefetch strategy");
  bench_prefetch->add_option("--config", config_path, "YAML simulation config");

  // soak
  SoakOptions soak;
  auto* soak_cmd = app.add_subcommand("soak", "Randomized write/read/promote loop with invariant checks");
  soak_cmd->add_option("--operations", soak.operations);
  soak_cmd->add_option("--seed", soak.seed);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      MetaStore meta;
      load_meta(state, meta);
      fs::create_directories(objects_dir(state));
      MountTable mounts;
      mounts.mount(ObjectPath(kVideoPrefix),
                   BackendDescriptor{"videos", BackendKind::kLocalDirectory, objects_dir(state), 0.0, false});
      StoreOptions so;
      so.tiers = SystemConfig{}.tiers;
      TieredStore store(so, mounts);

      ExtractorConfig ec;
      ec.kind = extractor_kind_from_string(extractor_kind);
      ec.vocabulary = default_vocabulary();
      ec.endpoint = endpoint;
      ec.labels_per_frame = labels_per_frame;
      auto extractor = make_extractor(ec);
      PipelineOptions po;
      po.frames.interval = frame_interval;
      po.on_extractor_failure = on_failure == "skip" ? ExtractorFailure::kSkip : ExtractorFailure::kAbort;

      const auto result = process_stream(read_stream_file(stream_file), po, *extractor, store, meta);
      store.flush();
      save_meta(state, meta);
      json j{{"stored", result.status == ProcessStatus::kStored},
             {"inclusion_probability", result.inclusion_probability},
             {"frames_scheduled", result.frames_scheduled}};
      if (result.record) j["record"] = *result.record;
      if (result.write) {
        j["placed_tier"] = to_string(result.write->placed_tier);
        j["modeled_write_ms"] = result.write->modeled_latency_ms;
      }
      if (!result.reason.empty()) j["reason"] = result.reason;
      std::cout << j.dump() << "\n";
    } else if (*query) {
      MetaStore meta;
      load_meta(state, meta);
      for (const auto& r : meta.query(parse_predicate(predicate_arg))) std::cout << json(r).dump() << "\n";
    } else if (*approx) {
      MetaStore meta;
      load_meta(state, meta);
      std::cout << json(approx_query(meta, parse_predicate(predicate_arg), q, seed)).dump(2) << "\n";
    } else if (*simulate_cmd) {
      const auto config = config_or_default(config_path);
      std::vector<TraceEvent> trace;
      if (!trace_in.empty()) {
        std::ifstream in(trace_in);
        if (!in) throw Error(ErrorCode::kNotFound, "cannot open " + trace_in);
        trace = read_trace(in);
      } else {
        trace = generate_workload(config.workload);
      }
      if (!trace_out.empty()) {
        std::ofstream out(trace_out, std::ios::trunc);
        write_trace(trace, out);
      }
      const auto report = replay_all(trace, config.system);
      if (out_path.empty()) {
        std::cout << (format == "csv" ? to_csv(report) : to_json_text(report));
      } else {
        export_report(report, format, out_path);
      }
    } else if (*trace_cmd) {
      std::ostringstream ss;
      write_trace(generate_workload(config_or_default(config_path).workload), ss);
      emit(ss.str(), out_path);
    } else if (*plan) {
      CapacityInputs in;
      if (!inputs_path.empty()) in = json::parse(slurp(inputs_path)).get<CapacityInputs>();
      if (o_machines->count()) in.machines = ci.machines;
      if (o_mem->count()) in.mem_per_machine = ci.mem_per_machine;
      if (o_hdd->count()) in.hdd_per_machine = ci.hdd_per_machine;
      if (o_file->count()) in.avg_file = ci.avg_file;
      if (o_lat->count()) in.per_image_latency_s = ci.per_image_latency_s;
      if (o_int->count()) in.frame_interval_s = ci.frame_interval_s;
      if (o_util->count()) in.utilization = ci.utilization;
      if (o_qps->count()) in.queries_per_server = ci.queries_per_server;
      if (o_conc->count()) in.concurrency_factor = ci.concurrency_factor;
      std::cout << json(capacity_plan(in)).dump(2) << "\n";
    } else if (*bench_alloc) {
      const auto c = compare_allocators(sat);
      std::cout << json{{"cascade", saturation_json(c.cascade)},
                        {"direct", saturation_json(c.direct)},
                        {"ratio", c.ratio}}
                       .dump(2)
                << "\n";
    } else if (*bench_prefetch) {
      const auto report = simulate(config_or_default(config_path));
      json rows = json::array();
      for (const auto& r : report.runs) {
        rows.push_back(json{{"strategy", r.strategy},
                            {"hit_rate", r.hit_rate},
                            {"reads", r.reads},
                            {"hits", r.hits},
                            {"prefetch_promoted", r.prefetch_promoted},
                            {"read_latency_mean_ms", r.read_latency.mean}});
      }
      std::cout << rows.dump(2) << "\n";
    } else if (*soak_cmd) {
      const auto r = run_soak(soak);
      std::cout << json{{"writes", r.writes},
                        {"reads", r.reads},
                        {"promotes", r.promotes},
                        {"invariant_checks", r.invariant_checks},
                        {"verified", r.verified},
                        {"mismatches", r.mismatches}}
                       .dump(2)
                << "\n";
      return r.mismatches == 0 ? 0 : 1;
    }
  } catch (const Error& e) {
    std::fprintf(stderr, "robocloud: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "robocloud: %s\n", e.what());
    return 2;
  }
  return 0;
}
