#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

#include "robocloud/error.hpp"
#include "robocloud/reduction.hpp"

using namespace robocloud;

namespace {

SessionRecord row(int i, std::set<std::string> labels, std::int64_t ts = 0) {
  SessionRecord r;
  r.session_id = "s" + std::to_string(i);
  r.user_id = "u";
  r.timestamp = ts ? ts : 1000 + i;
  r.duration = 1.0 + i % 7;
  r.location = i % 2 ? "kitchen" : "bedroom";
  r.labels = std::move(labels);
  r.object_path = ObjectPath("/v/" + r.session_id);
  return r;
}

// N rows, the first `matching` carry label "car".
std::vector<SessionRecord> dataset(int n, int matching) {
  std::vector<SessionRecord> out;
  for (int i = 0; i < n; ++i) out.push_back(row(i, i < matching ? std::set<std::string>{"car"} : std::set<std::string>{"tree"}));
  return out;
}

QueryPredicate has_car() {
  QueryPredicate p;
  p.labels_any = std::set<std::string>{"car"};
  return p;
}

// Exact binomial probability P(lo <= K <= hi) for K ~ Bin(n, p).
double binomial_interval(int n, double p, int lo, int hi) {
  double total = 0.0;
  for (int k = std::max(lo, 0); k <= std::min(hi, n); ++k) {
    total += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) +
                      k * std::log(p) + (n - k) * std::log1p(-p));
  }
  return total;
}

InclusionPolicy uniform(double rate) {
  InclusionPolicy p;
  p.kind = PolicyKind::kUniform;
  p.base_rate = rate;
  return p;
}

}  // namespace

TEST(PreLearning, IdentityRateAlwaysIncludes) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto d = pre_learning_decide(StreamMeta{i, "bedroom"}, uniform(1.0), rng);
    ASSERT_TRUE(d.include);
    ASSERT_EQ(d.probability, 1.0);
  }
}

TEST(PreLearning, ZeroRateIsRejected) {
  Rng rng(1);
  EXPECT_THROW(uniform(0.0).validate(), Error);
  EXPECT_THROW(pre_learning_decide(StreamMeta{}, uniform(0.0), rng), Error);
  InclusionPolicy labels;
  labels.kind = PolicyKind::kLabelWeighted;
  EXPECT_THROW(pre_learning_decide(StreamMeta{}, labels, rng), Error);
}

TEST(PreLearning, InclusionFrequencyMatchesRate) {
  Rng rng(42);
  int included = 0;
  for (int i = 0; i < 10000; ++i) {
    included += pre_learning_decide(StreamMeta{i, "kitchen"}, uniform(0.3), rng).include;
  }
  EXPECT_NEAR(included / 10000.0, 0.3, 0.02);
}

TEST(PreLearning, LocationMultiplierIsClamped) {
  InclusionPolicy p;
  p.kind = PolicyKind::kMetaRate;
  p.base_rate = 0.4;
  p.location_multipliers = {{"bedroom", 5.0}, {"garage", 0.001}};
  EXPECT_DOUBLE_EQ(pre_learning_probability(StreamMeta{0, "bedroom"}, p), 1.0);
  EXPECT_DOUBLE_EQ(pre_learning_probability(StreamMeta{0, "garage"}, p), 0.01);
  EXPECT_DOUBLE_EQ(pre_learning_probability(StreamMeta{0, "kitchen"}, p), 0.4);
}

TEST(PreMemorization, HotLabelAlwaysIncluded) {
  InclusionPolicy p;
  p.kind = PolicyKind::kLabelWeighted;
  p.base_rate = 0.1;
  p.label_weights = {{"dog", 1.0}};
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    auto d = pre_memorization_decide(row(i, {"dog", "chair"}), p, rng);
    ASSERT_TRUE(d.include);
    ASSERT_EQ(d.probability, 1.0);
  }
}

TEST(PreMemorization, WeightedFrequencyAndFallback) {
  InclusionPolicy p;
  p.kind = PolicyKind::kLabelWeighted;
  p.base_rate = 0.05;
  p.label_weights = {{"chair", 0.2}};
  p.p_min = 0.01;
  Rng rng(4);
  int included = 0;
  for (int i = 0; i < 10000; ++i) {
    auto d = pre_memorization_decide(row(i, {"chair"}), p, rng);
    ASSERT_DOUBLE_EQ(d.probability, 0.2);
    included += d.include;
  }
  EXPECT_NEAR(included / 10000.0, 0.2, 0.02);
  EXPECT_DOUBLE_EQ(pre_memorization_probability(row(0, {}), p), 0.05);
  p.base_rate = 0.001;
  p.validate();
  EXPECT_DOUBLE_EQ(pre_memorization_probability(row(0, {}), p), 0.01);  // floored
}

TEST(OnlineSample, IdentityAndDeterminism) {
  auto rows = dataset(50, 10);
  auto all = online_sample(rows, 1.0, 9);
  ASSERT_EQ(all.size(), rows.size());
  for (const auto& s : all) EXPECT_EQ(s.inclusion_probability, 1.0);

  auto a = online_sample(rows, 0.3, 77);
  auto b = online_sample(rows, 0.3, 77);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].record, b[i].record);
  EXPECT_THROW(online_sample(rows, 0.0, 1), Error);
}

// Stratified draws: run r feeds the sampler one draw per row from the lower
// stratum [0, q) when bit i of r is set and from [q, 1) otherwise. Each of
// the 16 strata has measure (1/2)^4, so every subset must appear exactly once.
TEST(OnlineSample, StratifiedSixteenSubsetsEachOnce) {
  auto rows = dataset(4, 2);
  const double q = 0.5;
  std::map<std::set<std::string>, int> seen;
  for (int run = 0; run < 16; ++run) {
    int i = 0;
    auto sample = online_sample(rows, q, [&] {
      const bool low = (run >> i++) & 1;
      return low ? q / 2 : (1.0 + q) / 2;
    });
    std::set<std::string> ids;
    for (const auto& s : sample) ids.insert(s.record.session_id);
    ++seen[ids];
  }
  EXPECT_EQ(seen.size(), 16u);
  for (const auto& [_, n] : seen) EXPECT_EQ(n, 1);

  // And with the seeded stream, subset frequencies approach 1/16.
  std::map<std::set<std::string>, int> freq;
  const int trials = 32000;
  for (int seed = 0; seed < trials; ++seed) {
    std::set<std::string> ids;
    for (const auto& s : online_sample(rows, q, static_cast<std::uint64_t>(seed))) {
      ids.insert(s.record.session_id);
    }
    ++freq[ids];
  }
  ASSERT_EQ(freq.size(), 16u);
  const double sd = std::sqrt(trials * (1.0 / 16) * (15.0 / 16));
  for (const auto& [_, n] : freq) EXPECT_NEAR(n, trials / 16.0, 4 * sd);
}

TEST(ApproxCount, FullSampleIsExact) {
  auto rows = dataset(30, 12);
  auto sample = online_sample(rows, 1.0, 1);
  auto a = approx_count(sample, has_car());
  EXPECT_EQ(a.estimate, 12.0);
  EXPECT_EQ(a.standard_error, 0.0);
  EXPECT_EQ(a.ci_low, a.ci_high);
  EXPECT_EQ(a.sample_size, 30u);
}

TEST(ApproxCount, RejectsBadProbabilities) {
  std::vector<SampledRow> bad{{row(1, {"car"}), 0.0}};
  EXPECT_THROW(approx_count(bad, has_car()), Error);
  bad[0].inclusion_probability = -0.5;
  EXPECT_THROW(approx_count(bad, has_car()), Error);
}

TEST(ApproxCount, IntervalInvariant) {
  auto rows = dataset(200, 30);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto a = approx_count(online_sample(rows, 0.2, seed), has_car());
    EXPECT_LE(a.ci_low, a.estimate);
    EXPECT_LE(a.estimate, a.ci_high);
    EXPECT_NEAR(a.ci_high, a.estimate + kZ95 * a.standard_error, 1e-9);
    EXPECT_NEAR(a.ci_low, std::max(0.0, a.estimate - kZ95 * a.standard_error), 1e-9);
  }
}

// Exhaustive expectation over every inclusion pattern, weighted by its exact
// probability.
TEST(ApproxCount, ExhaustiveExpectationEqualsTruth) {
  auto rows = dataset(4, 3);
  double expectation = 0.0;
  for (unsigned mask = 0; mask < 16; ++mask) {
    std::vector<SampledRow> s;
    for (unsigned i = 0; i < 4; ++i) {
      if (mask >> i & 1) s.push_back({rows[i], 0.5});
    }
    expectation += approx_count(s, has_car()).estimate / 16.0;
  }
  EXPECT_EQ(expectation, 3.0);
}

TEST(ApproxCount, ExhaustiveUnbiasedUnderHeterogeneousProbabilities) {
  InclusionPolicy policy;
  policy.kind = PolicyKind::kLabelWeighted;
  policy.base_rate = 0.15;
  policy.label_weights = {{"car", 0.6}, {"dog", 0.35}, {"bus", 1.0}};
  const std::vector<std::set<std::string>> label_sets{
      {"car"}, {"dog"}, {"car", "dog"}, {}, {"bus", "car"}, {"tree"},
      {"car"}, {"dog", "tree"}, {"car", "tree"}, {"bus"}, {}, {"car"}};
  std::vector<SessionRecord> rows;
  for (int i = 0; i < 12; ++i) rows.push_back(row(i, label_sets[i]));
  std::vector<double> p;
  for (const auto& r : rows) p.push_back(pre_memorization_probability(r, policy));

  const double truth = static_cast<double>(std::count_if(
      rows.begin(), rows.end(), [](const auto& r) { return r.labels.contains("car"); }));
  double expectation = 0.0, expectation_sum = 0.0, truth_sum = 0.0;
  for (const auto& r : rows) {
    if (r.labels.contains("car")) truth_sum += r.duration;
  }
  for (unsigned mask = 0; mask < (1u << 12); ++mask) {
    std::vector<SampledRow> s;
    double weight = 1.0;
    for (unsigned i = 0; i < 12; ++i) {
      if (mask >> i & 1) {
        s.push_back({rows[i], p[i]});
        weight *= p[i];
      } else {
        weight *= 1.0 - p[i];
      }
    }
    expectation += weight * approx_count(s, has_car()).estimate;
    expectation_sum += weight * approx_sum_duration(s, has_car()).estimate;
  }
  EXPECT_NEAR(expectation, truth, 1e-9);
  EXPECT_NEAR(expectation_sum, truth_sum, 1e-9);
}

TEST(ApproxCount, MonteCarloUnbiasedAndCovers) {
  auto rows = dataset(1000, 100);
  std::map<double, double> mean_width;
  for (double q : {0.1, 0.5}) {
    double sum = 0.0, sum_sq = 0.0, width = 0.0;
    int covered = 0;
    const int runs = 1000;
    for (int seed = 0; seed < runs; ++seed) {
      auto a = approx_count(online_sample(rows, q, static_cast<std::uint64_t>(seed)), has_car());
      sum += a.estimate;
      sum_sq += a.estimate * a.estimate;
      width += a.ci_high - a.ci_low;
      covered += a.ci_low <= 100.0 && 100.0 <= a.ci_high;
    }
    const double mean = sum / runs;
    const double sd = std::sqrt((sum_sq - runs * mean * mean) / (runs - 1));
    EXPECT_NEAR(mean, 100.0, 3 * sd / std::sqrt(runs)) << "q=" << q;
    EXPECT_GE(covered, 900) << "q=" << q;
    mean_width[q] = width / runs;
  }
  EXPECT_LT(mean_width[0.5], mean_width[0.1]);
}

TEST(ApproxCount, PreMemorizationThenApproxCountStaysUnbiased) {
  InclusionPolicy policy;
  policy.kind = PolicyKind::kLabelWeighted;
  policy.base_rate = 0.2;
  policy.label_weights = {{"car", 0.5}};
  auto rows = dataset(600, 150);
  double sum = 0.0, sum_sq = 0.0;
  const int runs = 1000;
  for (int seed = 0; seed < runs; ++seed) {
    Rng rng(static_cast<std::uint64_t>(seed));
    std::vector<SampledRow> kept;
    for (const auto& r : rows) {
      auto d = pre_memorization_decide(r, policy, rng);
      if (d.include) kept.push_back({r, d.probability});
    }
    const double e = approx_count(kept, has_car()).estimate;
    sum += e;
    sum_sq += e * e;
  }
  const double mean = sum / runs;
  const double sd = std::sqrt((sum_sq - runs * mean * mean) / (runs - 1));
  EXPECT_NEAR(mean, 150.0, 3 * sd / std::sqrt(runs));
}

TEST(ApproxQuery, FullRateEqualsExactCount) {
  MetaStore store;
  for (const auto& r : dataset(300, 40)) store.put_record(r);
  auto a = approx_query(store, has_car(), 1.0, 5);
  EXPECT_EQ(a.estimate, static_cast<double>(store.count(has_car())));
  EXPECT_EQ(a.standard_error, 0.0);

  QueryPredicate nothing;
  nothing.location = "moon";
  auto z = approx_query(store, nothing, 0.3, 5);
  EXPECT_EQ(z.estimate, 0.0);
  EXPECT_EQ(z.ci_low, 0.0);
  EXPECT_EQ(z.ci_high, 0.0);
}

TEST(ApproxQuery, UsesStoredInclusionProbabilities) {
  MetaStore store;
  auto rows = dataset(10, 10);
  for (const auto& r : rows) store.put_record(r, 0.25);
  // Every stored row stands for four originals.
  EXPECT_EQ(approx_query(store, has_car(), 1.0, 1).estimate, 40.0);
}

// Bernoulli sampling at q = 0.1 of 2,000 matches gives K ~ Bin(2000, 0.1) and
// estimate 10K, so relative error <= 5% iff 190 <= K <= 210. The pass count
// over 100 seeds is checked against that exact binomial probability (~0.566),
// and the 90%-of-runs bound is checked at the tolerance where the binomial
// probability exceeds 0.9.
TEST(ApproxQuery, RelativeErrorAtTenPercentRate) {
  MetaStore store;
  for (const auto& r : dataset(10000, 2000)) store.put_record(r);
  int within5 = 0, within15 = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const double rel = std::abs(approx_query(store, has_car(), 0.1, seed).estimate - 2000.0) / 2000.0;
    within5 += rel <= 0.05;
    within15 += rel <= 0.15;
  }
  const double p5 = binomial_interval(2000, 0.1, 190, 210);
  const double p15 = binomial_interval(2000, 0.1, 170, 230);
  EXPECT_NEAR(p5, 0.5662, 1e-3);
  EXPECT_NEAR(within5, 100 * p5, 4 * std::sqrt(100 * p5 * (1 - p5)));
  EXPECT_GT(p15, 0.97);
  EXPECT_GE(within15, 90);
}
