#include <gtest/gtest.h>
#include <httplib.h>

#include <filesystem>
#include <map>
#include <thread>

#include <nlohmann/json.hpp>

#include "robocloud/error.hpp"
#include "robocloud/learning.hpp"
#include "robocloud/rng.hpp"

using namespace robocloud;

namespace {

// Independent reimplementation of the synthetic extractor's index rule.
std::uint64_t oracle_fnv1a(const Blob& b) {
  std::uint64_t h = 14695981039346656037ULL;
  for (auto c : b) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::uint64_t oracle_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::set<std::string> oracle_labels(const Blob& frame, const std::vector<std::string>& vocab,
                                    std::size_t k) {
  std::set<std::string> out;
  const auto h = oracle_fnv1a(frame);
  for (std::size_t i = 0; i < k; ++i) out.insert(vocab[oracle_mix(h + i) % vocab.size()]);
  return out;
}

Blob random_bytes(Rng& rng, std::size_t n) {
  Blob b(n);
  for (auto& c : b) c = static_cast<std::uint8_t>(rng.below(256));
  return b;
}

VideoStream stream_with(double duration, std::vector<double> offsets, std::uint64_t seed = 1) {
  Rng rng(seed);
  VideoStream s;
  s.session_id = "sess-" + std::to_string(seed);
  s.user_id = "alice";
  s.start_timestamp = 1'700'000'000 + static_cast<std::int64_t>(seed);
  s.duration = duration;
  s.location = "kitchen";
  for (double o : offsets) s.frames.push_back({o, random_bytes(rng, 32)});
  return s;
}

std::vector<double> every(double step, double until) {
  std::vector<double> out;
  for (int i = 0; i * step <= until + 1e-12; ++i) out.push_back(i * step);
  return out;
}

ExtractorConfig synthetic(std::size_t k = 3) {
  ExtractorConfig c;
  c.vocabulary = default_vocabulary();
  c.labels_per_frame = k;
  return c;
}

struct Stores {
  explicit Stores(bool fail_writes = false) {
    mounts.mount(ObjectPath("/videos"),
                 BackendDescriptor{"videos", BackendKind::kInMemoryMock, {}, 0.0, fail_writes});
    StoreOptions o;
    o.tiers = default_tiers(100 * kMB, 200 * kMB, 400 * kMB);
    store = std::make_unique<TieredStore>(o, mounts);
  }
  MountTable mounts;
  std::unique_ptr<TieredStore> store;
  MetaStore meta;
};

}  // namespace

TEST(ScheduleFrames, TwoSecondGridOverHalfSecondFrames) {
  auto s = stream_with(10.0, every(0.5, 10.0));
  auto picked = schedule_frames(s, FramePolicy{});
  std::vector<double> offsets;
  for (auto i : picked) offsets.push_back(s.frames[i].offset);
  EXPECT_EQ(offsets, (std::vector<double>{0, 2, 4, 6, 8, 10}));
}

TEST(ScheduleFrames, DegenerateStreams) {
  EXPECT_EQ(schedule_frames(stream_with(0.0, {0.0}), FramePolicy{}).size(), 1u);
  EXPECT_EQ(schedule_frames(stream_with(5.0, {0.3, 1.0, 4.0}), FramePolicy{60.0}),
            (std::vector<std::size_t>{0}));
  EXPECT_TRUE(schedule_frames(stream_with(5.0, {}), FramePolicy{}).empty());
  EXPECT_THROW(schedule_frames(stream_with(5.0, {1.0}), FramePolicy{0.0}), Error);
  EXPECT_THROW(schedule_frames(stream_with(5.0, {2.0, 1.0}), FramePolicy{}), Error);
  EXPECT_THROW(schedule_frames(stream_with(5.0, {6.0}), FramePolicy{}), Error);
}

// Offsets and intervals on a quarter-second lattice are exact in binary, so
// the oracle can work on integer quarters.
TEST(ScheduleFrames, MatchesGridOracleOnRandomStreams) {
  Rng rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    const int dur_q = static_cast<int>(rng.between(0, 80));
    const int interval_q = static_cast<int>(rng.between(1, 12));
    std::vector<int> quarters;
    for (int q = 0; q <= dur_q; ++q) {
      if (rng.bernoulli(0.3)) quarters.push_back(q);
    }
    std::vector<double> offsets;
    for (int q : quarters) offsets.push_back(q / 4.0);
    auto s = stream_with(dur_q / 4.0, offsets, static_cast<std::uint64_t>(trial));

    std::vector<std::size_t> expected;
    for (int t = 0; t <= dur_q; t += interval_q) {
      for (std::size_t i = 0; i < quarters.size(); ++i) {
        if (quarters[i] >= t) {
          if (expected.empty() || expected.back() != i) expected.push_back(i);
          break;
        }
      }
    }
    auto got = schedule_frames(s, FramePolicy{interval_q / 4.0});
    ASSERT_EQ(got, expected) << "trial " << trial;
    if (!quarters.empty()) ASSERT_FALSE(got.empty());
  }
}

TEST(ExtractLabels, DeterministicAndBounded) {
  Rng rng(3);
  const auto frame = random_bytes(rng, 64);
  const auto a = extract_labels(frame, synthetic());
  const auto b = extract_labels(frame, synthetic());
  EXPECT_EQ(a, b);
  EXPECT_GE(a.size(), 1u);
  EXPECT_LE(a.size(), 3u);

  ExtractorConfig one;
  one.vocabulary = {"dog"};
  one.labels_per_frame = 4;
  for (int i = 0; i < 20; ++i) {
    EXPECT_EQ(extract_labels(random_bytes(rng, 16), one), (std::set<std::string>{"dog"}));
  }
}

TEST(ExtractLabels, HistogramMatchesIndependentReimplementation) {
  Rng rng(2024);
  std::map<std::string, int> got, expected;
  const auto& vocab = default_vocabulary();
  for (int i = 0; i < 100; ++i) {
    const auto frame = random_bytes(rng, 1 + rng.below(200));
    for (const auto& l : extract_labels(frame, synthetic(4))) ++got[l];
    for (const auto& l : oracle_labels(frame, vocab, 4)) ++expected[l];
  }
  EXPECT_EQ(got, expected);
  EXPECT_EQ(vocab.size(), 50u);
  for (const char* must : {"dog", "chair", "sofa"}) {
    EXPECT_NE(std::find(vocab.begin(), vocab.end(), must), vocab.end());
  }
}

TEST(ExtractLabels, InvalidConfigs) {
  ExtractorConfig c;
  EXPECT_THROW(c.validate(), Error);
  c.vocabulary = {"a", "a"};
  EXPECT_THROW(c.validate(), Error);
  c.vocabulary = {"a"};
  c.labels_per_frame = 0;
  EXPECT_THROW(c.validate(), Error);
  c.labels_per_frame = 1;
  c.kind = ExtractorKind::kExternalEndpoint;
  EXPECT_THROW(c.validate(), Error);
}

TEST(ProcessStream, RecordLabelsAreUnionOverScheduledFrames) {
  Stores st;
  auto s = stream_with(10.0, every(0.5, 10.0), 11);
  s.size_bytes = 10 * kMB;
  SyntheticHashExtractor ex(synthetic());
  auto r = process_stream(s, PipelineOptions{}, ex, *st.store, st.meta);
  ASSERT_EQ(r.status, ProcessStatus::kStored);
  EXPECT_EQ(r.frames_scheduled, 6u);

  std::set<std::string> expected;
  for (double t : {0.0, 2.0, 4.0, 6.0, 8.0, 10.0}) {
    const auto idx = static_cast<std::size_t>(t / 0.5);
    auto l = oracle_labels(s.frames[idx].bytes, default_vocabulary(), 3);
    expected.insert(l.begin(), l.end());
  }
  EXPECT_EQ(r.record->labels, expected);
  EXPECT_EQ(r.inclusion_probability, 1.0);

  const auto stored = st.meta.get_by_key(s.session_id, s.start_timestamp);
  EXPECT_EQ(stored, *r.record);
  EXPECT_EQ(stored.object_path.str(), "/videos/alice/sess-11-1700000011.bin");
  EXPECT_EQ(st.store->block_size(BlockId(stored.object_path.str())), 10 * kMB);
  auto [blob, receipt] = st.store->read_block(BlockId(stored.object_path.str()));
  EXPECT_EQ(blob, s.payload());
  EXPECT_EQ(st.mounts.fetch(stored.object_path), s.payload());
}

TEST(ProcessStream, LabelProvenanceOnRandomStreams) {
  Stores st;
  SyntheticHashExtractor ex(synthetic(2));
  Rng rng(5);
  for (std::uint64_t i = 0; i < 60; ++i) {
    auto s = stream_with(static_cast<double>(rng.between(0, 30)), {}, 100 + i);
    for (double t = 0; t <= s.duration; t += 0.75) s.frames.push_back({t, random_bytes(rng, 24)});
    auto r = process_stream(s, PipelineOptions{}, ex, *st.store, st.meta);
    ASSERT_EQ(r.status, ProcessStatus::kStored);
    std::set<std::string> seen;
    for (auto idx : schedule_frames(s, FramePolicy{})) {
      auto l = oracle_labels(s.frames[idx].bytes, default_vocabulary(), 2);
      seen.insert(l.begin(), l.end());
    }
    for (const auto& l : r.record->labels) EXPECT_TRUE(seen.contains(l)) << l;
    EXPECT_EQ(r.record->labels, seen);
  }
  EXPECT_EQ(st.meta.size(), 60u);
}

TEST(ProcessStream, DeterministicAcrossIndependentStores) {
  auto s = stream_with(8.0, every(1.0, 8.0), 9);
  SyntheticHashExtractor ex(synthetic());
  Stores a, b;
  auto ra = process_stream(s, PipelineOptions{}, ex, *a.store, a.meta);
  auto rb = process_stream(s, PipelineOptions{}, ex, *b.store, b.meta);
  EXPECT_EQ(*ra.record, *rb.record);
  EXPECT_EQ(*ra.write, *rb.write);
}

TEST(ProcessStream, ZeroProbabilitySamplerStoresNothing) {
  Stores st;
  SyntheticHashExtractor ex(synthetic());
  PipelineOptions opts;
  opts.pre_learning = [](const VideoStream&) { return SampleDecision{false, 0.0}; };
  auto s = stream_with(4.0, every(1.0, 4.0));
  auto r = process_stream(s, opts, ex, *st.store, st.meta);
  EXPECT_EQ(r.status, ProcessStatus::kSkippedPreLearning);
  EXPECT_EQ(r.inclusion_probability, 0.0);
  EXPECT_FALSE(r.record);
  EXPECT_EQ(st.meta.size(), 0u);
  EXPECT_FALSE(st.store->contains(BlockId(object_path_for(s, "/videos").str())));
}

TEST(ProcessStream, PolicySamplersAreReproducibleAndRecordProbability) {
  InclusionPolicy learn;
  learn.kind = PolicyKind::kUniform;
  learn.base_rate = 0.5;
  learn.seed = 77;
  InclusionPolicy mem;
  mem.kind = PolicyKind::kLabelWeighted;
  mem.base_rate = 0.5;
  mem.seed = 78;
  PipelineOptions opts;
  opts.pre_learning = make_pre_learning_sampler(learn);
  opts.pre_memorization = make_pre_memorization_sampler(mem);

  SyntheticHashExtractor ex(synthetic());
  Stores a, b;
  int stored = 0, rejected_mem = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    auto s = stream_with(4.0, every(2.0, 4.0), i);
    auto ra = process_stream(s, opts, ex, *a.store, a.meta);
    auto rb = process_stream(s, opts, ex, *b.store, b.meta);
    ASSERT_EQ(ra.status, rb.status);
    if (ra.status == ProcessStatus::kStored) {
      ++stored;
      EXPECT_DOUBLE_EQ(ra.inclusion_probability, 0.25);
    }
    rejected_mem += ra.status == ProcessStatus::kSkippedPreMemorization;
  }
  EXPECT_EQ(a.meta.size(), static_cast<std::size_t>(stored));
  for (const auto& row : a.meta.rows()) EXPECT_DOUBLE_EQ(row.inclusion_probability, 0.25);
  EXPECT_GT(stored, 20);
  EXPECT_GT(rejected_mem, 20);
  EXPECT_THROW(make_pre_learning_sampler(mem), Error);
  EXPECT_THROW(make_pre_memorization_sampler(learn), Error);
}

TEST(ProcessStream, DuplicateKeyRejected) {
  Stores st;
  SyntheticHashExtractor ex(synthetic());
  auto s = stream_with(2.0, {0.0, 1.0});
  process_stream(s, PipelineOptions{}, ex, *st.store, st.meta);
  try {
    process_stream(s, PipelineOptions{}, ex, *st.store, st.meta);
    FAIL() << "expected duplicate error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAlreadyExists);
  }
  EXPECT_EQ(st.meta.size(), 1u);
}

TEST(ProcessStream, FailedBlobWriteLeavesNoRecord) {
  Stores st(/*fail_writes=*/true);
  SyntheticHashExtractor ex(synthetic());
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto s = stream_with(4.0, every(1.0, 4.0), i);
    EXPECT_THROW(process_stream(s, PipelineOptions{}, ex, *st.store, st.meta), Error);
  }
  EXPECT_EQ(st.meta.size(), 0u);
  st.store->check_invariants();
  for (const auto& row : st.meta.rows()) {
    EXPECT_TRUE(st.mounts.exists(row.record.object_path));
  }
}

TEST(ProcessStream, StreamFileRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "robocloud-stream-test";
  std::filesystem::remove_all(dir);
  auto s = stream_with(6.0, every(0.5, 6.0), 4);
  s.size_bytes = 12345;
  write_stream_file(s, dir / "s.jsonl");
  auto back = read_stream_file(dir / "s.jsonl");
  EXPECT_EQ(back.session_id, s.session_id);
  EXPECT_EQ(back.start_timestamp, s.start_timestamp);
  EXPECT_EQ(back.size_bytes, s.size_bytes);
  ASSERT_EQ(back.frames.size(), s.frames.size());
  for (std::size_t i = 0; i < s.frames.size(); ++i) {
    EXPECT_EQ(back.frames[i].offset, s.frames[i].offset);
    EXPECT_EQ(back.frames[i].bytes, s.frames[i].bytes);
  }
  std::filesystem::remove(dir / "s-frame3.bin");
  EXPECT_THROW(read_stream_file(dir / "s.jsonl"), Error);
  std::filesystem::remove_all(dir);
}

class EndpointTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/extract", [](const httplib::Request& req, httplib::Response& res) {
      // Labels depend on the body length; "unicorn" is outside the vocabulary.
      nlohmann::json body{
          {"labels", nlohmann::json::array({req.body.size() % 2 ? "dog" : "sofa", "unicorn"})}};
      res.set_content(body.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  ExtractorConfig config() const {
    ExtractorConfig c = synthetic();
    c.kind = ExtractorKind::kExternalEndpoint;
    c.endpoint = "127.0.0.1:" + std::to_string(port_);
    return c;
  }
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
};

TEST_F(EndpointTest, LabelsFilteredToVocabulary) {
  ExternalEndpointExtractor ex(config());
  Blob odd{1, 2, 3}, even{1, 2};
  EXPECT_EQ(ex.extract(odd), (std::set<std::string>{"dog"}));
  EXPECT_EQ(ex.extract(even), (std::set<std::string>{"sofa"}));

  Stores st;
  auto s = stream_with(4.0, every(2.0, 4.0));
  auto r = process_stream(s, PipelineOptions{}, ex, *st.store, st.meta);
  EXPECT_EQ(r.record->labels, (std::set<std::string>{"sofa"}));  // 32-byte frames
}

TEST(Endpoint, UnreachableIsSurfacedThenSkipOrAbort) {
  ExtractorConfig c = synthetic();
  c.kind = ExtractorKind::kExternalEndpoint;
  c.endpoint = "127.0.0.1:1";
  c.timeout = std::chrono::milliseconds(300);
  ExternalEndpointExtractor ex(c);
  try {
    ex.extract(Blob{1});
    FAIL() << "expected unavailable";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnavailable);
  }

  Stores st;
  auto s = stream_with(2.0, {0.0});
  EXPECT_THROW(process_stream(s, PipelineOptions{}, ex, *st.store, st.meta), Error);
  PipelineOptions skip;
  skip.on_extractor_failure = ExtractorFailure::kSkip;
  auto r = process_stream(s, skip, ex, *st.store, st.meta);
  EXPECT_EQ(r.status, ProcessStatus::kSkippedExtractor);
  EXPECT_EQ(st.meta.size(), 0u);
  EXPECT_FALSE(st.store->contains(BlockId(object_path_for(s, "/videos").str())));
}
