#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "robocloud/error.hpp"
#include "robocloud/metastore.hpp"
#include "robocloud/rng.hpp"

using namespace robocloud;

namespace {

const std::vector<std::string> kLocations{"living room", "bedroom", "kitchen", "garage", "hallway"};
const std::vector<std::string> kLabels{"dog", "cat", "chair", "sofa", "person", "table", "tv", "cup"};

SessionRecord make(std::string session, std::int64_t ts, std::set<std::string> labels,
                   std::string location = "living room") {
  SessionRecord r;
  r.session_id = std::move(session);
  r.user_id = "u1";
  r.timestamp = ts;
  r.duration = 10.0;
  r.location = std::move(location);
  r.labels = std::move(labels);
  r.object_path = ObjectPath("/videos/" + r.session_id + "-" + std::to_string(ts));
  return r;
}

SessionRecord random_record(Rng& rng, int i) {
  SessionRecord r;
  r.session_id = "s" + std::to_string(rng.below(400));
  r.user_id = "u" + std::to_string(rng.below(30));
  r.timestamp = 1'700'000'000 + static_cast<std::int64_t>(rng.below(86400 * 7));
  r.duration = static_cast<double>(rng.below(120));
  r.location = kLocations[rng.below(kLocations.size())];
  const auto n = rng.below(4);
  for (std::uint64_t k = 0; k < n; ++k) r.labels.insert(kLabels[rng.below(kLabels.size())]);
  r.object_path = ObjectPath("/videos/" + r.user_id + "/" + r.session_id + "-" +
                             std::to_string(r.timestamp));
  return r;
}

std::set<std::string> random_labels(Rng& rng, std::uint64_t max) {
  std::set<std::string> out;
  const auto n = rng.below(max + 1);
  for (std::uint64_t k = 0; k < n; ++k) out.insert(kLabels[rng.below(kLabels.size())]);
  return out;
}

QueryPredicate random_predicate(Rng& rng, const std::vector<SessionRecord>& pool) {
  QueryPredicate p;
  do {
    if (rng.bernoulli(0.5)) {
      std::int64_t a = 1'700'000'000 + static_cast<std::int64_t>(rng.below(86400 * 7));
      std::int64_t b = a + static_cast<std::int64_t>(rng.below(86400 * 2));
      p.time_range = TimeRange{a, b};
    }
    if (rng.bernoulli(0.4)) p.location = kLocations[rng.below(kLocations.size())];
    if (rng.bernoulli(0.4)) p.labels_any = random_labels(rng, 3);
    if (rng.bernoulli(0.3)) p.labels_all = random_labels(rng, 2);
    if (rng.bernoulli(0.1)) p.session_id = pool[rng.below(pool.size())].session_id;
    if (rng.bernoulli(0.15)) p.user_id = "u" + std::to_string(rng.below(30));
  } while (!p.time_range && !p.location && !p.labels_any && !p.labels_all &&
           !p.session_id && !p.user_id);
  return p;
}

// Independent oracle: filter every record and sort by (timestamp, session_id).
std::vector<SessionRecord> linear_scan(const std::vector<SessionRecord>& all,
                                       const QueryPredicate& p) {
  std::vector<SessionRecord> out;
  for (const auto& r : all) {
    bool ok = true;
    if (p.time_range) ok &= r.timestamp >= p.time_range->start && r.timestamp <= p.time_range->end;
    if (p.location) ok &= r.location == *p.location;
    if (p.session_id) ok &= r.session_id == *p.session_id;
    if (p.user_id) ok &= r.user_id == *p.user_id;
    if (p.labels_all) {
      ok &= std::includes(r.labels.begin(), r.labels.end(), p.labels_all->begin(), p.labels_all->end());
    }
    if (p.labels_any) {
      std::vector<std::string> common;
      std::set_intersection(r.labels.begin(), r.labels.end(), p.labels_any->begin(),
                            p.labels_any->end(), std::back_inserter(common));
      ok &= !common.empty();
    }
    if (ok) out.push_back(r);
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.timestamp, a.session_id) < std::tie(b.timestamp, b.session_id);
  });
  return out;
}

std::vector<SessionRecord> fill(MetaStore& store, Rng& rng, int n) {
  std::vector<SessionRecord> all;
  while (static_cast<int>(all.size()) < n) {
    auto r = random_record(rng, static_cast<int>(all.size()));
    if (store.contains(key_of(r))) continue;
    store.put_record(r);
    all.push_back(r);
  }
  return all;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST(PutRecord, RoundTripAndIndexes) {
  MetaStore store;
  auto r = make("s1", 100, {"dog", "chair"});
  store.put_record(r);
  EXPECT_EQ(store.get_by_key("s1", 100), r);

  QueryPredicate dog;
  dog.labels_any = std::set<std::string>{"dog"};
  QueryPredicate chair;
  chair.labels_any = std::set<std::string>{"chair"};
  EXPECT_EQ(store.query(dog), std::vector<SessionRecord>{r});
  EXPECT_EQ(store.query(chair), std::vector<SessionRecord>{r});
}

TEST(PutRecord, RejectsDuplicatesAndInvalidRecords) {
  MetaStore store;
  store.put_record(make("s1", 100, {}));
  EXPECT_EQ(code_of([&] { store.put_record(make("s1", 100, {"x"})); }), ErrorCode::kAlreadyExists);
  store.put_record(make("s1", 101, {}));  // same session, new timestamp
  EXPECT_EQ(code_of([&] { store.put_record(make("s2", 1, {}, "")); }), ErrorCode::kInvalidArgument);
  auto no_path = make("s3", 1, {});
  no_path.object_path = ObjectPath("/");
  EXPECT_EQ(code_of([&] { store.put_record(no_path); }), ErrorCode::kInvalidArgument);
}

TEST(PutRecord, EveryRecordFoundByItsOwnFields) {
  MetaStore store;
  Rng rng(3);
  auto all = fill(store, rng, 1000);
  for (const auto& r : all) {
    QueryPredicate p;
    p.time_range = TimeRange{r.timestamp, r.timestamp};
    p.location = r.location;
    p.labels_all = r.labels;
    p.session_id = r.session_id;
    p.user_id = r.user_id;
    auto got = store.query(p);
    ASSERT_EQ(got.size(), 1u);
    EXPECT_EQ(got[0], r);
  }
}

TEST(GetByKey, MissingKeyAndRoundTrips) {
  MetaStore store;
  EXPECT_EQ(code_of([&] { store.get_by_key("nope", 1); }), ErrorCode::kNotFound);
  Rng rng(4);
  auto all = fill(store, rng, 100);
  for (const auto& r : all) EXPECT_EQ(store.get_by_key(r.session_id, r.timestamp), r);
}

TEST(Query, EmptyStoreAndMalformedPredicates) {
  MetaStore store;
  QueryPredicate p;
  p.location = "bedroom";
  EXPECT_TRUE(store.query(p).empty());
  EXPECT_EQ(code_of([&] { store.query(QueryPredicate{}); }), ErrorCode::kInvalidArgument);
  QueryPredicate backwards;
  backwards.time_range = TimeRange{10, 5};
  EXPECT_EQ(code_of([&] { store.query(backwards); }), ErrorCode::kInvalidArgument);
}

TEST(Query, LabelsAllIsSubsetSemantics) {
  MetaStore store;
  store.put_record(make("a", 1, {"dog"}));
  store.put_record(make("b", 2, {"cat"}));
  auto both = make("c", 3, {"dog", "cat"});
  store.put_record(both);
  QueryPredicate p;
  p.labels_all = std::set<std::string>{"dog", "cat"};
  EXPECT_EQ(store.query(p), std::vector<SessionRecord>{both});
  p = QueryPredicate{};
  p.labels_any = std::set<std::string>{"dog", "cat"};
  EXPECT_EQ(store.query(p).size(), 3u);
}

TEST(Query, TimeRangeBoundsAreInclusive) {
  MetaStore store;
  for (std::int64_t t : {5, 10, 15, 20}) store.put_record(make("s" + std::to_string(t), t, {}));
  QueryPredicate p;
  p.time_range = TimeRange{10, 15};
  auto got = store.query(p);
  ASSERT_EQ(got.size(), 2u);
  EXPECT_EQ(got[0].timestamp, 10);
  EXPECT_EQ(got[1].timestamp, 15);
  p.time_range = TimeRange{20, INT64_MAX};
  EXPECT_EQ(store.query(p).size(), 1u);
}

TEST(Query, MatchesLinearScanOracle) {
  MetaStore store;
  Rng rng(42);
  auto all = fill(store, rng, 2000);
  for (int i = 0; i < 500; ++i) {
    auto p = random_predicate(rng, all);
    ASSERT_EQ(store.query(p), linear_scan(all, p)) << nlohmann::json(p).dump();
    ASSERT_EQ(store.count(p), linear_scan(all, p).size());
  }
}

TEST(Query, IndexPostingsReconstructRecordSet) {
  MetaStore store;
  Rng rng(8);
  auto all = fill(store, rng, 500);
  std::set<RecordKey> from_locations, from_labels, expected, labeled;
  for (const auto& r : all) {
    expected.insert(key_of(r));
    if (!r.labels.empty()) labeled.insert(key_of(r));
  }
  for (const auto& loc : kLocations) {
    auto s = store.location_postings(loc);
    from_locations.insert(s.begin(), s.end());
  }
  for (const auto& l : store.labels()) {
    auto s = store.label_postings(l);
    from_labels.insert(s.begin(), s.end());
  }
  EXPECT_EQ(from_locations, expected);
  EXPECT_EQ(from_labels, labeled);
}

TEST(TopLabels, CountsAndTieBreaks) {
  MetaStore store;
  EXPECT_TRUE(store.top_labels(std::nullopt, std::nullopt, 3).empty());
  store.put_record(make("a", 1, {"dog", "chair"}));
  store.put_record(make("b", 2, {"dog"}));
  store.put_record(make("c", 3, {"dog"}));
  store.put_record(make("d", 4, {"dog", "sofa"}, "bedroom"));
  auto living = store.top_labels(std::string("living room"), std::nullopt, 5);
  EXPECT_EQ(living, (std::vector<LabelStat>{{"dog", 3}, {"chair", 1}}));

  MetaStore tie;
  tie.put_record(make("a", 1, {"dog", "cat"}));
  tie.put_record(make("b", 2, {"dog", "cat"}));
  EXPECT_EQ(tie.top_labels(std::nullopt, std::nullopt, 1), (std::vector<LabelStat>{{"cat", 2}}));
  EXPECT_EQ(code_of([&] { tie.top_labels(std::nullopt, std::nullopt, 0); }),
            ErrorCode::kInvalidArgument);
}

TEST(TopLabels, PrefixPropertyAndCountConservation) {
  MetaStore store;
  Rng rng(5);
  auto all = fill(store, rng, 800);
  std::uint64_t occurrences = 0;
  for (const auto& r : all) {
    if (r.location == "kitchen") occurrences += r.labels.size();
  }
  auto full = store.top_labels(std::string("kitchen"), std::nullopt, 100);
  std::uint64_t sum = 0;
  for (const auto& s : full) sum += s.count;
  EXPECT_EQ(sum, occurrences);
  for (std::size_t k = 1; k < full.size(); ++k) {
    auto a = store.top_labels(std::string("kitchen"), std::nullopt, k);
    auto b = store.top_labels(std::string("kitchen"), std::nullopt, k + 1);
    ASSERT_TRUE(std::equal(a.begin(), a.end(), b.begin()));
  }
}

TEST(Jsonl, ExportUsesExactFieldNamesAndReimports) {
  MetaStore store;
  Rng rng(6);
  fill(store, rng, 50);
  std::stringstream buf;
  store.export_jsonl(buf);
  std::string first;
  std::getline(std::stringstream(buf.str()), first);
  auto j = nlohmann::json::parse(first);
  std::set<std::string> keys;
  for (const auto& [k, _] : j.items()) keys.insert(k);
  EXPECT_EQ(keys, (std::set<std::string>{"session_id", "user_id", "timestamp", "duration",
                                         "location", "labels", "object_path"}));
  MetaStore copy;
  EXPECT_EQ(copy.import_jsonl(buf), 50u);
  std::stringstream again;
  copy.export_jsonl(again);
  std::stringstream orig;
  store.export_jsonl(orig);
  EXPECT_EQ(again.str(), orig.str());
}
