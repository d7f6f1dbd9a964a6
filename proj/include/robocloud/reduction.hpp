#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "robocloud/metastore.hpp"
#include "robocloud/rng.hpp"

namespace robocloud {

enum class PolicyKind { kMetaRate, kLabelWeighted, kUniform };

std::string to_string(PolicyKind kind);
PolicyKind policy_kind_from_string(std::string_view name);

struct InclusionPolicy {
  PolicyKind kind = PolicyKind::kUniform;
  double base_rate = 1.0;
  std::map<std::string, double> label_weights;
  // meta-rate only: scales base_rate for streams recorded at a location.
  std::map<std::string, double> location_multipliers;
  double p_min = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StreamMeta {
  std::int64_t timestamp = 0;
  std::string location;
};

struct SampleDecision {
  bool include = false;
  double probability = 1.0;
};

// Sampling before learning: a light-weight rate from the stream's metadata.
double pre_learning_probability(const StreamMeta& meta, const InclusionPolicy& policy);
SampleDecision pre_learning_decide(const StreamMeta& meta, const InclusionPolicy& policy,
                                   Rng& rng);

// Sampling before memorization: the hottest of the record's labels sets the
// rate, floored at p_min.
double pre_memorization_probability(const SessionRecord& record, const InclusionPolicy& policy);
SampleDecision pre_memorization_decide(const SessionRecord& record,
                                       const InclusionPolicy& policy, Rng& rng);

struct SampledRow {
  SessionRecord record;
  double inclusion_probability = 1.0;
};

// Online sampling during recall: each row kept independently with
// probability q. `uniform` supplies draws in [0, 1).
std::vector<SampledRow> online_sample(std::span<const SessionRecord> rows, double q,
                                      const std::function<double()>& uniform);
std::vector<SampledRow> online_sample(std::span<const SessionRecord> rows, double q,
                                      std::uint64_t seed);

struct ApproxAnswer {
  double estimate = 0.0;
  double standard_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::uint64_t sample_size = 0;
  std::string method;
};

inline constexpr double kZ95 = 1.96;

void to_json(nlohmann::json& j, const ApproxAnswer& a);

// Horvitz-Thompson COUNT: sum of 1/p over matching rows, with variance
// sum of (1-p)/p^2 and a normal-approximation 95% interval.
ApproxAnswer approx_count(std::span<const SampledRow> sampled, const QueryPredicate& predicate);

// Horvitz-Thompson SUM(duration) over matching rows.
ApproxAnswer approx_sum_duration(std::span<const SampledRow> sampled,
                                 const QueryPredicate& predicate);

// Samples the stored rows at rate q and rescales. Rows that a sampler already
// thinned carry their stored probability, so the effective probability is
// stored_p * q.
ApproxAnswer approx_query(const MetaStore& store, const QueryPredicate& predicate, double q,
                          std::uint64_t seed);

}  // namespace robocloud
