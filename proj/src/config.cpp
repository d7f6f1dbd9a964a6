#include "robocloud/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "robocloud/error.hpp"

namespace robocloud {

namespace {

template <typename T>
void read(const YAML::Node& node, const char* key, T& out) {
  if (node && node[key]) out = node[key].as<T>();
}

void read_bytes(const YAML::Node& node, const char* key, std::uint64_t& out) {
  if (node && node[key]) out = parse_bytes(node[key].as<std::string>());
}

InclusionPolicy read_policy(const YAML::Node& n, std::uint64_t default_seed) {
  InclusionPolicy p;
  p.seed = default_seed;
  if (n["kind"]) p.kind = policy_kind_from_string(n["kind"].as<std::string>());
  read(n, "base_rate", p.base_rate);
  read(n, "p_min", p.p_min);
  read(n, "seed", p.seed);
  if (n["label_weights"]) p.label_weights = n["label_weights"].as<std::map<std::string, double>>();
  if (n["location_multipliers"]) {
    p.location_multipliers = n["location_multipliers"].as<std::map<std::string, double>>();
  }
  p.validate();
  return p;
}

LevelCost read_cost(const YAML::Node& n, LevelCost c) {
  read(n, "read_overhead_ms", c.read_overhead_ms);
  read(n, "write_overhead_ms", c.write_overhead_ms);
  if (n["throughput_mb_s"]) c.throughput_bytes_per_s = n["throughput_mb_s"].as<double>() * kMB;
  return c;
}

}  // namespace

std::uint64_t parse_bytes(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.')) ++i;
  if (i == 0) throw Error(ErrorCode::kInvalidArgument, "not a byte size: " + std::string(text));
  const double value = std::stod(std::string(text.substr(0, i)));
  std::string unit;
  for (char c : text.substr(i)) {
    if (!std::isspace(static_cast<unsigned char>(c))) unit += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  double mult = 1;
  if (unit.empty() || unit == "B") {
    mult = 1;
  } else if (unit == "KB") {
    mult = 1e3;
  } else if (unit == "MB") {
    mult = 1e6;
  } else if (unit == "GB") {
    mult = 1e9;
  } else if (unit == "TB") {
    mult = 1e12;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown size unit: " + std::string(text));
  }
  return static_cast<std::uint64_t>(std::llround(value * mult));
}

SimulationConfig parse_simulation_config(const std::string& yaml_text) {
  SimulationConfig c;
  try {
    const YAML::Node root = YAML::Load(yaml_text);
    std::uint64_t seed = c.workload.seed;
    read(root, "seed", seed);
    c.workload.seed = seed;

    if (auto w = root["workload"]) {
      auto& wl = c.workload;
      read(w, "days", wl.days);
      read(w, "users", wl.users);
      read(w, "streams_per_user_per_day", wl.streams_per_user_per_day);
      read_bytes(w, "avg_object_size", wl.avg_object_size);
      read(w, "label_popularity", wl.label_popularity);
      read(w, "period_locality", wl.period_locality);
      read(w, "reads_per_period", wl.reads_per_period);
      read(w, "queries_per_period", wl.queries_per_period);
      read(w, "hot_fraction", wl.hot_fraction);
      read(w, "object_popularity", wl.object_popularity);
      read(w, "seed", wl.seed);
      if (auto m = w["query_mix"]) {
        read(m, "key_lookup", wl.query_mix.key_lookup);
        read(m, "label", wl.query_mix.label);
        read(m, "location", wl.query_mix.location);
        read(m, "time_range", wl.query_mix.time_range);
      }
    }

    auto& sys = c.system;
    if (auto s = root["store"]) {
      if (s["allocator"]) sys.allocator = allocator_from_string(s["allocator"].as<std::string>());
      read(s, "evictor", sys.evictor);
      if (auto tiers = s["tiers"]) {
        sys.tiers.clear();
        for (const auto& t : tiers) {
          const Level level = level_from_string(t["name"].as<std::string>());
          TierConfig tc = default_tier(level, parse_bytes(t["capacity"].as<std::string>()));
          tc.cost = read_cost(t, tc.cost);
          sys.tiers.push_back(tc);
        }
      }
      if (auto b = s["backend"]) {
        if (b["kind"]) sys.backend.kind = backend_kind_from_string(b["kind"].as<std::string>());
        if (b["root"]) sys.backend.root = b["root"].as<std::string>();
        read(b, "latency_ms", sys.backend.latency_ms);
        sys.backend_cost = read_cost(b, sys.backend_cost);
      }
    }
    if (auto p = root["prefetch"]) {
      if (p["strategies"]) {
        sys.strategies.clear();
        for (const auto& s : p["strategies"]) sys.strategies.push_back(prefetch_strategy_from_string(s.as<std::string>()));
      }
      read(p, "fraction", sys.prefetch_fraction);
      read(p, "load_threshold", sys.load_threshold);
      read(p, "gate_window_s", sys.gate_window_s);
    }
    if (auto p = root["pipeline"]) {
      read(p, "frame_interval", sys.frames.interval);
      read(p, "labels_per_frame", sys.labels_per_frame);
    }
    if (auto r = root["reduction"]) {
      if (r["pre_learning"]) sys.pre_learning = read_policy(r["pre_learning"], seed);
      if (r["pre_memorization"]) sys.pre_memorization = read_policy(r["pre_memorization"], seed);
    }
    if (auto q = root["query_cost"]) {
      read(q, "overhead_ms", sys.query_overhead_ms);
      read(q, "per_row_ms", sys.query_per_row_ms);
    }
  } catch (const YAML::Exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "config: " + std::string(e.what()));
  }
  c.workload.validate();
  c.system.validate();
  return c;
}

SimulationConfig load_simulation_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_simulation_config(ss.str());
}

}  // namespace robocloud
