#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace robocloud {

struct CapacityInputs {
  std::uint64_t machines = 10;
  std::uint64_t mem_per_machine = 20'000'000'000;   // bytes
  std::uint64_t hdd_per_machine = 200'000'000'000;  // bytes
  std::uint64_t avg_file = 10'000'000;              // bytes
  double per_image_latency_s = 0.16;
  double frame_interval_s = 2.0;
  double utilization = 0.8;                         // (0, 1]
  std::uint64_t queries_per_server = 100;
  // Fraction of users issuing a query at any instant, (0, 1].
  double concurrency_factor = 0.1;

  void validate() const;
};

struct CapacityPlan {
  CapacityInputs inputs;
  std::uint64_t machines = 0;
  std::uint64_t cache_bytes = 0;
  std::uint64_t buffered_files = 0;
  std::uint64_t streams_per_server = 0;
  std::uint64_t concurrent_queries = 0;
  std::uint64_t supported_users = 0;
  std::vector<std::string> notes;
};

//   cache_bytes        = machines * (mem + hdd)
//   buffered_files     = floor(cache_bytes / avg_file)
//   streams_per_server = floor(frame_interval / per_image_latency * utilization)
//   concurrent_queries = machines * queries_per_server
//   supported_users    = concurrent_queries / concurrency_factor
CapacityPlan capacity_plan(const CapacityInputs& inputs);

void to_json(nlohmann::json& j, const CapacityInputs& in);
void from_json(const nlohmann::json& j, CapacityInputs& in);
void to_json(nlohmann::json& j, const CapacityPlan& p);

}  // namespace robocloud
