#include "robocloud/capacity.hpp"

#include <cmath>

#include "robocloud/error.hpp"

namespace robocloud {

namespace {

// Products like (2.0 / 0.16) * 0.8 land a few ulps below the integer they
// represent; a relative nudge keeps floor() from dropping a whole unit.
std::uint64_t floor_tolerant(double x) {
  return static_cast<std::uint64_t>(std::floor(x * (1.0 + 1e-12) + 1e-9));
}

}  // namespace

void CapacityInputs::validate() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kInvalidArgument, m); };
  if (machines == 0 || avg_file == 0 || queries_per_server == 0) bad("capacity inputs must be positive");
  if (mem_per_machine == 0 && hdd_per_machine == 0) bad("machines need some cache space");
  if (!(per_image_latency_s > 0) || !(frame_interval_s > 0)) bad("latencies must be positive");
  if (!(utilization > 0 && utilization <= 1)) bad("utilization outside (0,1]");
  if (!(concurrency_factor > 0 && concurrency_factor <= 1)) bad("concurrency_factor outside (0,1]");
}

CapacityPlan capacity_plan(const CapacityInputs& in) {
  in.validate();
  CapacityPlan p;
  p.inputs = in;
  p.machines = in.machines;
  p.cache_bytes = in.machines * (in.mem_per_machine + in.hdd_per_machine);
  p.buffered_files = p.cache_bytes / in.avg_file;
  p.streams_per_server = floor_tolerant(in.frame_interval_s / in.per_image_latency_s * in.utilization);
  p.concurrent_queries = in.machines * in.queries_per_server;
  p.supported_users = floor_tolerant(static_cast<double>(p.concurrent_queries) / in.concurrency_factor);
  p.notes = {
      "buffered_files is the exact quotient; a rounded figure such as 200,000 for the default inputs "
      "understates it by 10%",
      "streams_per_server assumes the label extractor and the storage server share each machine at the "
      "given utilization",
      "supported_users divides concurrent query slots by the fraction of users querying at once",
  };
  return p;
}

void to_json(nlohmann::json& j, const CapacityInputs& in) {
  j = nlohmann::json{{"machines", in.machines},
                     {"mem_per_machine", in.mem_per_machine},
                     {"hdd_per_machine", in.hdd_per_machine},
                     {"avg_file", in.avg_file},
                     {"per_image_latency_s", in.per_image_latency_s},
                     {"frame_interval_s", in.frame_interval_s},
                     {"utilization", in.utilization},
                     {"queries_per_server", in.queries_per_server},
                     {"concurrency_factor", in.concurrency_factor}};
}

void from_json(const nlohmann::json& j, CapacityInputs& in) {
  CapacityInputs d;
  in.machines = j.value("machines", d.machines);
  in.mem_per_machine = j.value("mem_per_machine", d.mem_per_machine);
  in.hdd_per_machine = j.value("hdd_per_machine", d.hdd_per_machine);
  in.avg_file = j.value("avg_file", d.avg_file);
  in.per_image_latency_s = j.value("per_image_latency_s", d.per_image_latency_s);
  in.frame_interval_s = j.value("frame_interval_s", d.frame_interval_s);
  in.utilization = j.value("utilization", d.utilization);
  in.queries_per_server = j.value("queries_per_server", d.queries_per_server);
  in.concurrency_factor = j.value("concurrency_factor", d.concurrency_factor);
}

void to_json(nlohmann::json& j, const CapacityPlan& p) {
  j = nlohmann::json{{"inputs", p.inputs},
                     {"machines", p.machines},
                     {"cache_bytes", p.cache_bytes},
                     {"buffered_files", p.buffered_files},
                     {"streams_per_server", p.streams_per_server},
                     {"concurrent_queries", p.concurrent_queries},
                     {"supported_users", p.supported_users},
                     {"notes", p.notes}};
}

}  // namespace robocloud
