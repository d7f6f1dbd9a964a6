#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "robocloud/backend.hpp"
#include "robocloud/metastore.hpp"
#include "robocloud/reduction.hpp"
#include "robocloud/tiered_store.hpp"

namespace robocloud {

struct Frame {
  double offset = 0.0;  // seconds from stream start
  Blob bytes;
};

struct VideoStream {
  std::string session_id;
  std::string user_id;
  std::int64_t start_timestamp = 0;
  double duration = 0.0;
  std::string location;
  std::vector<Frame> frames;
  // Logical payload size for storage accounting; defaults to the byte count
  // of the concatenated frames.
  std::optional<std::uint64_t> size_bytes;

  void validate() const;
  Blob payload() const;
};

struct FramePolicy {
  double interval = 2.0;
  void validate() const;
};

// Indices of the frames to run extraction on: for every grid point
// t = k * interval <= duration, the earliest frame at or after t.
std::vector<std::size_t> schedule_frames(const VideoStream& stream, const FramePolicy& policy);

enum class ExtractorKind { kSyntheticHash, kExternalEndpoint };
std::string to_string(ExtractorKind kind);
ExtractorKind extractor_kind_from_string(std::string_view name);

struct ExtractorConfig {
  ExtractorKind kind = ExtractorKind::kSyntheticHash;
  std::vector<std::string> vocabulary;
  std::size_t labels_per_frame = 3;
  std::optional<std::string> endpoint;  // "host:port" or "http://host:port"
  std::chrono::milliseconds timeout{2000};
  void validate() const;
};

// 50 household object labels.
const std::vector<std::string>& default_vocabulary();

// 64-bit FNV-1a.
std::uint64_t content_hash(std::span<const std::uint8_t> bytes);

class LabelExtractor {
 public:
  virtual ~LabelExtractor() = default;
  virtual std::set<std::string> extract(std::span<const std::uint8_t> frame) = 0;
};

// Label i of a frame is vocabulary[splitmix64(hash + i) % V] for i < k.
class SyntheticHashExtractor final : public LabelExtractor {
 public:
  explicit SyntheticHashExtractor(ExtractorConfig config);
  std::set<std::string> extract(std::span<const std::uint8_t> frame) override;

 private:
  ExtractorConfig config_;
};

// POSTs the frame bytes to <endpoint>/extract and expects
// {"labels": [...]}; labels outside the vocabulary are dropped. Throws
// Error(kUnavailable) when the endpoint cannot be reached.
class ExternalEndpointExtractor final : public LabelExtractor {
 public:
  explicit ExternalEndpointExtractor(ExtractorConfig config);
  std::set<std::string> extract(std::span<const std::uint8_t> frame) override;

 private:
  ExtractorConfig config_;
  std::set<std::string> vocabulary_;
};

std::unique_ptr<LabelExtractor> make_extractor(const ExtractorConfig& config);
std::set<std::string> extract_labels(std::span<const std::uint8_t> frame,
                                     const ExtractorConfig& config);

enum class ExtractorFailure { kAbort, kSkip };

// Admission gates around learning. A decision carries the exact probability
// the stream was admitted with.
using PreLearningSampler = std::function<SampleDecision(const VideoStream&)>;
using PreMemorizationSampler = std::function<SampleDecision(const SessionRecord&)>;

// Policy-backed gates. Draws are seeded from the policy seed and the session
// key, so the outcome for a stream does not depend on processing order.
PreLearningSampler make_pre_learning_sampler(InclusionPolicy policy);
PreMemorizationSampler make_pre_memorization_sampler(InclusionPolicy policy);

struct PipelineOptions {
  FramePolicy frames;
  PreLearningSampler pre_learning;          // absent: admit with p = 1
  PreMemorizationSampler pre_memorization;  // absent: admit with p = 1
  std::string path_prefix = "/videos";
  ExtractorFailure on_extractor_failure = ExtractorFailure::kAbort;
};

enum class ProcessStatus { kStored, kSkippedPreLearning, kSkippedPreMemorization, kSkippedExtractor };
std::string to_string(ProcessStatus status);

struct ProcessResult {
  ProcessStatus status = ProcessStatus::kStored;
  std::optional<SessionRecord> record;
  std::optional<WriteReceipt> write;
  double inclusion_probability = 1.0;
  std::size_t frames_scheduled = 0;
  std::string reason;
};

ObjectPath object_path_for(const VideoStream& stream, const std::string& prefix);

// Stream -> labels -> blob write -> record. The record is inserted only
// after the blob write has succeeded.
ProcessResult process_stream(const VideoStream& stream, const PipelineOptions& options,
                             LabelExtractor& extractor, TieredStore& store, MetaStore& meta);

// JSON Lines stream file: one header object, then one {"offset", "file"}
// line per frame with the file path relative to the stream file.
VideoStream read_stream_file(const std::filesystem::path& path);
void write_stream_file(const VideoStream& stream, const std::filesystem::path& path);

}  // namespace robocloud
