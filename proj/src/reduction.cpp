#include "robocloud/reduction.hpp"

#include <algorithm>
#include <cmath>

#include "robocloud/error.hpp"

namespace robocloud {

namespace {

bool is_probability(double p) { return p > 0.0 && p <= 1.0; }

void check_rate(double q) {
  if (!is_probability(q)) {
    throw Error(ErrorCode::kInvalidArgument, "sampling rate outside (0,1]");
  }
}

ApproxAnswer finish(double estimate, double variance, std::uint64_t n, std::string method) {
  ApproxAnswer a;
  a.estimate = estimate;
  a.standard_error = std::sqrt(std::max(0.0, variance));
  a.ci_low = std::max(0.0, estimate - kZ95 * a.standard_error);
  a.ci_high = estimate + kZ95 * a.standard_error;
  a.sample_size = n;
  a.method = std::move(method);
  return a;
}

template <typename Value>
ApproxAnswer horvitz_thompson(std::span<const SampledRow> sampled,
                              const QueryPredicate& predicate, Value value,
                              std::string method) {
  predicate.validate();
  double estimate = 0.0, variance = 0.0;
  for (const auto& row : sampled) {
    const double p = row.inclusion_probability;
    if (!is_probability(p)) {
      throw Error(ErrorCode::kInvalidArgument, "inclusion probability outside (0,1]");
    }
    if (!predicate.matches(row.record)) continue;
    const double y = value(row.record);
    estimate += y / p;
    variance += (1.0 - p) / (p * p) * y * y;
  }
  return finish(estimate, variance, sampled.size(), std::move(method));
}

}  // namespace

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kMetaRate: return "meta-rate";
    case PolicyKind::kLabelWeighted: return "label-weighted";
    case PolicyKind::kUniform: return "uniform";
  }
  return "unknown";
}

PolicyKind policy_kind_from_string(std::string_view name) {
  if (name == "meta-rate") return PolicyKind::kMetaRate;
  if (name == "label-weighted") return PolicyKind::kLabelWeighted;
  if (name == "uniform") return PolicyKind::kUniform;
  throw Error(ErrorCode::kInvalidArgument, "unknown sampling policy: " + std::string(name));
}

void InclusionPolicy::validate() const {
  if (!is_probability(base_rate)) {
    throw Error(ErrorCode::kInvalidArgument, "base_rate outside (0,1]");
  }
  if (!is_probability(p_min)) throw Error(ErrorCode::kInvalidArgument, "p_min outside (0,1]");
  for (const auto& [label, w] : label_weights) {
    if (!is_probability(w)) {
      throw Error(ErrorCode::kInvalidArgument, "weight for " + label + " outside (0,1]");
    }
  }
  for (const auto& [loc, m] : location_multipliers) {
    if (!(m > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "multiplier for " + loc + " must be > 0");
    }
  }
}

double pre_learning_probability(const StreamMeta& meta, const InclusionPolicy& policy) {
  policy.validate();
  if (policy.kind == PolicyKind::kLabelWeighted) {
    throw Error(ErrorCode::kInvalidArgument,
                "label-weighted policy needs labels, which do not exist before learning");
  }
  double p = policy.base_rate;
  if (policy.kind == PolicyKind::kMetaRate) {
    auto it = policy.location_multipliers.find(meta.location);
    if (it != policy.location_multipliers.end()) p *= it->second;
  }
  return std::clamp(p, policy.p_min, 1.0);
}

SampleDecision pre_learning_decide(const StreamMeta& meta, const InclusionPolicy& policy,
                                   Rng& rng) {
  const double p = pre_learning_probability(meta, policy);
  return {rng.uniform01() < p, p};
}

double pre_memorization_probability(const SessionRecord& record,
                                    const InclusionPolicy& policy) {
  policy.validate();
  if (policy.kind != PolicyKind::kLabelWeighted) {
    throw Error(ErrorCode::kInvalidArgument, "pre-memorization sampling needs a label-weighted policy");
  }
  double p = record.labels.empty() ? policy.base_rate : 0.0;
  for (const auto& label : record.labels) {
    auto it = policy.label_weights.find(label);
    p = std::max(p, it == policy.label_weights.end() ? policy.base_rate : it->second);
  }
  return std::clamp(p, policy.p_min, 1.0);
}

SampleDecision pre_memorization_decide(const SessionRecord& record,
                                       const InclusionPolicy& policy, Rng& rng) {
  const double p = pre_memorization_probability(record, policy);
  return {rng.uniform01() < p, p};
}

std::vector<SampledRow> online_sample(std::span<const SessionRecord> rows, double q,
                                      const std::function<double()>& uniform) {
  check_rate(q);
  std::vector<SampledRow> out;
  for (const auto& r : rows) {
    if (uniform() < q) out.push_back(SampledRow{r, q});
  }
  return out;
}

std::vector<SampledRow> online_sample(std::span<const SessionRecord> rows, double q,
                                      std::uint64_t seed) {
  Rng rng(seed);
  return online_sample(rows, q, [&] { return rng.uniform01(); });
}

void to_json(nlohmann::json& j, const ApproxAnswer& a) {
  j = nlohmann::json{{"estimate", a.estimate},
                     {"standard_error", a.standard_error},
                             {"ci95", {a.ci_low, a.ci_high}},
                             {"sample_size", a.sample_size},
                             {"method", a.method}};
}

ApproxAnswer approx_count(std::span<const SampledRow> sampled, const QueryPredicate& predicate) {
  return horvitz_thompson(sampled, predicate, [](const SessionRecord&) { return 1.0; },
                          "horvitz-thompson-count");
}

ApproxAnswer approx_sum_duration(std::span<const SampledRow> sampled,
                                 const QueryPredicate& predicate) {
  return horvitz_thompson(sampled, predicate,
                          [](const SessionRecord& r) { return r.duration; },
                          "horvitz-thompson-sum-duration");
}

ApproxAnswer approx_query(const MetaStore& store, const QueryPredicate& predicate, double q,
                          std::uint64_t seed) {
  check_rate(q);
  predicate.validate();
  Rng rng(seed);
  std::vector<SampledRow> sampled;
  for (auto& row : store.rows()) {
    if (rng.uniform01() < q) {
      sampled.push_back(SampledRow{std::move(row.record), row.inclusion_probability * q});
    }
  }
  return approx_count(sampled, predicate);
}

}  // namespace robocloud
