#include "robocloud/learning.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "robocloud/error.hpp"

namespace robocloud {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  std::uint64_t z = x + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_text(std::string_view s) {
  return content_hash({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
}

// Grid points are computed as k * interval; this absorbs the rounding of
// that product so a frame at exactly 6.0 s matches grid point 3 * 2.0.
constexpr double kGridEps = 1e-9;

}  // namespace

void VideoStream::validate() const {
  if (session_id.empty()) throw Error(ErrorCode::kInvalidArgument, "stream without session_id");
  if (user_id.empty()) throw Error(ErrorCode::kInvalidArgument, "stream without user_id");
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorCode::kInvalidArgument, "stream duration must be >= 0");
  }
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const double off = frames[i].offset;
    if (!(off >= 0.0) || off > duration) {
      throw Error(ErrorCode::kInvalidArgument,
                  "frame " + std::to_string(i) + " offset outside [0, duration]");
    }
    if (i > 0 && !(off > frames[i - 1].offset)) {
      throw Error(ErrorCode::kInvalidArgument, "frame offsets must be strictly increasing");
    }
  }
}

Blob VideoStream::payload() const {
  Blob out;
  std::size_t total = 0;
  for (const auto& f : frames) total += f.bytes.size();
  out.reserve(total);
  for (const auto& f : frames) out.insert(out.end(), f.bytes.begin(), f.bytes.end());
  return out;
}

void FramePolicy::validate() const {
  if (!(interval > 0.0) || !std::isfinite(interval)) {
    throw Error(ErrorCode::kInvalidArgument, "frame interval must be > 0");
  }
}

std::vector<std::size_t> schedule_frames(const VideoStream& stream, const FramePolicy& policy) {
  stream.validate();
  policy.validate();
  std::vector<std::size_t> picked;
  std::size_t cursor = 0;
  for (std::uint64_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * policy.interval;
    if (t > stream.duration + kGridEps) break;
    while (cursor < stream.frames.size() && stream.frames[cursor].offset < t - kGridEps) ++cursor;
    if (cursor == stream.frames.size()) break;
    if (picked.empty() || picked.back() != cursor) picked.push_back(cursor);
  }
  return picked;
}

std::string to_string(ExtractorKind kind) {
  return kind == ExtractorKind::kSyntheticHash ? "synthetic-hash" : "external-endpoint";
}

ExtractorKind extractor_kind_from_string(std::string_view name) {
  if (name == "synthetic-hash") return ExtractorKind::kSyntheticHash;
  if (name == "external-endpoint") return ExtractorKind::kExternalEndpoint;
  throw Error(ErrorCode::kInvalidArgument, "unknown extractor kind: " + std::string(name));
}

void ExtractorConfig::validate() const {
  if (vocabulary.empty()) throw Error(ErrorCode::kInvalidArgument, "empty vocabulary");
  std::set<std::string> seen;
  for (const auto& v : vocabulary) {
    if (v.empty()) throw Error(ErrorCode::kInvalidArgument, "empty label in vocabulary");
    if (!seen.insert(v).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate vocabulary label: " + v);
    }
  }
  if (labels_per_frame < 1) throw Error(ErrorCode::kInvalidArgument, "labels_per_frame must be >= 1");
  if (kind == ExtractorKind::kExternalEndpoint && (!endpoint || endpoint->empty())) {
    throw Error(ErrorCode::kInvalidArgument, "external extractor needs an endpoint");
  }
}

const std::vector<std::string>& default_vocabulary() {
  static const std::vector<std::string> vocab{
      "dog",       "cat",        "chair",     "sofa",      "table",      "bed",
      "lamp",      "television", "laptop",    "phone",     "book",       "cup",
      "bottle",    "bowl",       "plate",     "fork",      "knife",      "spoon",
      "microwave", "oven",       "sink",      "refrigerator", "toaster", "kettle",
      "clock",     "vase",       "plant",     "window",    "door",       "curtain",
      "rug",       "pillow",     "blanket",   "shelf",     "cabinet",    "mirror",
      "toilet",    "bathtub",    "towel",     "toothbrush", "backpack",  "umbrella",
      "shoe",      "person",     "child",     "toy",       "ball",       "remote",
      "keyboard",  "fan"};
  return vocab;
}

std::uint64_t content_hash(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::uint8_t b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

SyntheticHashExtractor::SyntheticHashExtractor(ExtractorConfig config) : config_(std::move(config)) {
  config_.validate();
}

std::set<std::string> SyntheticHashExtractor::extract(std::span<const std::uint8_t> frame) {
  const std::uint64_t h = content_hash(frame);
  const std::uint64_t v = config_.vocabulary.size();
  std::set<std::string> out;
  for (std::size_t i = 0; i < config_.labels_per_frame; ++i) {
    out.insert(config_.vocabulary[splitmix64(h + i) % v]);
  }
  return out;
}

std::unique_ptr<LabelExtractor> make_extractor(const ExtractorConfig& config) {
  config.validate();
  if (config.kind == ExtractorKind::kSyntheticHash) {
    return std::make_unique<SyntheticHashExtractor>(config);
  }
  return std::make_unique<ExternalEndpointExtractor>(config);
}

std::set<std::string> extract_labels(std::span<const std::uint8_t> frame,
                                     const ExtractorConfig& config) {
  return make_extractor(config)->extract(frame);
}

std::string to_string(ProcessStatus status) {
  switch (status) {
    case ProcessStatus::kStored: return "stored";
    case ProcessStatus::kSkippedPreLearning: return "skipped-pre-learning";
    case ProcessStatus::kSkippedPreMemorization: return "skipped-pre-memorization";
    case ProcessStatus::kSkippedExtractor: return "skipped-extractor";
  }
  return "?";
}

ObjectPath object_path_for(const VideoStream& stream, const std::string& prefix) {
  return ObjectPath(prefix).join(stream.user_id)
      .join(stream.session_id + "-" + std::to_string(stream.start_timestamp) + ".bin");
}

namespace {

std::uint64_t session_seed(std::uint64_t seed, std::uint64_t stage, const std::string& session,
                           std::int64_t timestamp) {
  const std::uint64_t key = hash_text(session) ^ splitmix64(static_cast<std::uint64_t>(timestamp));
  return mix_seed(mix_seed(seed, stage), key);
}

}  // namespace

PreLearningSampler make_pre_learning_sampler(InclusionPolicy policy) {
  pre_learning_probability(StreamMeta{}, policy);  // rejects invalid policies now
  return [policy = std::move(policy)](const VideoStream& s) {
    Rng rng(session_seed(policy.seed, 1, s.session_id, s.start_timestamp));
    return pre_learning_decide(StreamMeta{s.start_timestamp, s.location}, policy, rng);
  };
}

PreMemorizationSampler make_pre_memorization_sampler(InclusionPolicy policy) {
  pre_memorization_probability(SessionRecord{}, policy);
  return [policy = std::move(policy)](const SessionRecord& r) {
    Rng rng(session_seed(policy.seed, 2, r.session_id, r.timestamp));
    return pre_memorization_decide(r, policy, rng);
  };
}

ProcessResult process_stream(const VideoStream& stream, const PipelineOptions& options,
                             LabelExtractor& extractor, TieredStore& store, MetaStore& meta) {
  stream.validate();
  options.frames.validate();
  ProcessResult result;

  if (options.pre_learning) {
    const auto d = options.pre_learning(stream);
    result.inclusion_probability = d.probability;
    if (!d.include) {
      result.status = ProcessStatus::kSkippedPreLearning;
      result.reason = "rejected by pre-learning sampler";
      return result;
    }
  }

  SessionRecord record;
  record.session_id = stream.session_id;
  record.user_id = stream.user_id;
  record.timestamp = stream.start_timestamp;
  record.duration = stream.duration;
  record.location = stream.location;
  record.object_path = object_path_for(stream, options.path_prefix);
  validate_record(record);

  if (meta.contains(key_of(record))) {
    throw Error(ErrorCode::kAlreadyExists, "record already stored for session " + stream.session_id);
  }

  const auto picked = schedule_frames(stream, options.frames);
  result.frames_scheduled = picked.size();
  for (std::size_t idx : picked) {
    std::set<std::string> labels;
    try {
      labels = extractor.extract(stream.frames[idx].bytes);
    } catch (const Error& e) {
      if (options.on_extractor_failure == ExtractorFailure::kAbort) throw;
      result.status = ProcessStatus::kSkippedExtractor;
      result.reason = e.what();
      return result;
    }
    record.labels.insert(labels.begin(), labels.end());
  }

  if (options.pre_memorization) {
    const auto d = options.pre_memorization(record);
    result.inclusion_probability *= d.probability;
    if (!d.include) {
      result.status = ProcessStatus::kSkippedPreMemorization;
      result.reason = "rejected by pre-memorization sampler";
      return result;
    }
  }

  const Blob payload = stream.payload();
  Block block;
  block.id = BlockId(record.object_path.str());
  block.payload_ref = record.object_path;
  block.size = stream.size_bytes.value_or(std::max<std::uint64_t>(1, payload.size()));
  result.write = store.write_block(block, payload);

  meta.put_record(record, result.inclusion_probability);
  result.record = std::move(record);
  result.status = ProcessStatus::kStored;
  return result;
}

VideoStream read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kNotFound, "cannot open stream file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kInvalidArgument, "empty stream file");
  VideoStream s;
  try {
    const auto h = nlohmann::json::parse(line);
    s.session_id = h.at("session_id").get<std::string>();
    s.user_id = h.at("user_id").get<std::string>();
    s.start_timestamp = h.at("start_timestamp").get<std::int64_t>();
    s.duration = h.at("duration").get<double>();
    s.location = h.value("location", std::string{});
    if (h.contains("size_bytes")) s.size_bytes = h.at("size_bytes").get<std::uint64_t>();
    const auto dir = path.parent_path();
    std::size_t n = 1;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      const auto f = nlohmann::json::parse(line);
      Frame frame;
      frame.offset = f.at("offset").get<double>();
      const auto file = dir / f.at("file").get<std::string>();
      std::ifstream fin(file, std::ios::binary);
      if (!fin) {
        throw Error(ErrorCode::kNotFound,
                    "line " + std::to_string(n) + ": missing frame file " + file.string());
      }
      frame.bytes.assign(std::istreambuf_iterator<char>(fin), {});
      s.frames.push_back(std::move(frame));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, "malformed stream file: " + std::string(e.what()));
  }
  s.validate();
  return s;
}

void write_stream_file(const VideoStream& stream, const std::filesystem::path& path) {
  stream.validate();
  const auto dir = path.parent_path();
  if (!dir.empty()) std::filesystem::create_directories(dir);
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path.string());
  nlohmann::json h{{"session_id", stream.session_id},
                   {"user_id", stream.user_id},
                   {"start_timestamp", stream.start_timestamp},
                   {"duration", stream.duration},
                   {"location", stream.location}};
  if (stream.size_bytes) h["size_bytes"] = *stream.size_bytes;
  out << h.dump() << '\n';
  const std::string stem = path.stem().string();
  for (std::size_t i = 0; i < stream.frames.size(); ++i) {
    const std::string name = stem + "-frame" + std::to_string(i) + ".bin";
    std::ofstream fout(dir / name, std::ios::binary);
    const auto& b = stream.frames[i].bytes;
    fout.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    out << nlohmann::json{{"offset", stream.frames[i].offset}, {"file", name}}.dump() << '\n';
  }
}

}  // namespace robocloud
