#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "robocloud/backend.hpp"
#include "robocloud/mount_table.hpp"

namespace robocloud {

inline constexpr std::uint64_t kMB = 1'000'000;
inline constexpr std::uint64_t kGB = 1'000'000'000;

// Storage levels in top-to-bottom order; kBackend is the persistent store
// underneath every tier.
enum class Level : std::uint8_t { kMemory = 0, kSsd = 1, kHdd = 2, kBackend = 3 };

std::string to_string(Level level);
Level level_from_string(std::string_view name);

class BlockId {
 public:
  BlockId() = default;
  explicit BlockId(std::string v) : value_(std::move(v)) {}
  const std::string& str() const { return value_; }
  friend auto operator<=>(const BlockId&, const BlockId&) = default;

 private:
  std::string value_;
};

struct BlockIdHash {
  std::size_t operator()(const BlockId& id) const {
    return std::hash<std::string>{}(id.str());
  }
};

struct Block {
  BlockId id;
  std::uint64_t size = 0;  // logical bytes, drives accounting and cost
  ObjectPath payload_ref;  // where the backend keeps the payload
};

// Per-level latency parameters: overhead_ms + bytes / throughput.
struct LevelCost {
  double read_overhead_ms = 0.0;
  double write_overhead_ms = 0.0;
  double throughput_bytes_per_s = 1.0;

  double read_ms(std::uint64_t bytes) const;
  double write_ms(std::uint64_t bytes) const;
};

struct TierConfig {
  Level name = Level::kMemory;
  std::uint64_t capacity = 0;
  LevelCost cost;
};

// memory (0.1 ms, 650 MB/s), ssd (1 ms, 120 MB/s), hdd (5 ms, 60 MB/s).
LevelCost default_cost(Level level);
TierConfig default_tier(Level level, std::uint64_t capacity);
std::vector<TierConfig> default_tiers(std::uint64_t memory, std::uint64_t ssd,
                                      std::uint64_t hdd);

enum class AllocatorKind { kDefaultCascade, kDirectWrite };

std::string to_string(AllocatorKind kind);
AllocatorKind allocator_from_string(std::string_view name);

struct Move {
  BlockId block;
  Level from = Level::kMemory;
  Level to = Level::kMemory;
  std::uint64_t bytes = 0;
  friend bool operator==(const Move&, const Move&) = default;
};

struct WriteReceipt {
  BlockId block_id;
  std::uint64_t bytes = 0;
  Level placed_tier = Level::kMemory;
  std::vector<Move> moves;  // evictor-driven, in execution order
  double modeled_latency_ms = 0.0;
  friend bool operator==(const WriteReceipt&, const WriteReceipt&) = default;
};

struct ReadReceipt {
  BlockId block_id;
  Level source = Level::kMemory;
  bool hit = false;
  double modeled_latency_ms = 0.0;
  std::optional<Level> promoted_to;
};

struct PromotionRecord {
  BlockId block_id;
  Level from = Level::kBackend;
  Level target = Level::kMemory;
  bool promoted = false;
  std::string reason;  // empty when promoted
  double modeled_latency_ms = 0.0;
};

// Latency model shared by receipts and their recomputation.
class CostModel {
 public:
  CostModel(std::vector<TierConfig> tiers, LevelCost backend);

  const LevelCost& cost(Level level) const;
  // Inter-tier transfer is read(source) + write(destination). Demotion to the
  // backend drops a copy that has already been persisted, so it is free.
  double move_ms(const Move& move) const;
  double write_latency_ms(const WriteReceipt& receipt) const;

 private:
  std::map<Level, LevelCost> costs_;
};

// Victim ordering for one tier.
class Evictor {
 public:
  virtual ~Evictor() = default;
  virtual void on_insert(const BlockId& id) = 0;
  virtual void on_access(const BlockId& id) = 0;
  virtual void on_remove(const BlockId& id) = 0;
  // Calls fn on resident ids, first victim first, until fn returns false.
  virtual void visit_victims(const std::function<bool(const BlockId&)>& fn) const = 0;
};

using EvictorFactory = std::function<std::unique_ptr<Evictor>()>;

// "lru" and "fifo" are always registered.
void register_evictor(const std::string& name, EvictorFactory factory);
bool evictor_registered(const std::string& name);
std::unique_ptr<Evictor> make_evictor(const std::string& name);

enum class PersistMode {
  kSynchronous,   // payload persisted inside write_block; deterministic
  kAsynchronous,  // background worker; flush() waits for it
};

struct StoreOptions {
  std::vector<TierConfig> tiers;
  AllocatorKind allocator = AllocatorKind::kDirectWrite;
  std::string evictor = "lru";
  LevelCost backend_cost = default_cost(Level::kBackend);
  PersistMode persist = PersistMode::kSynchronous;
};

struct StoreMetrics {
  std::uint64_t writes = 0;
  std::uint64_t reads = 0;
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t total_moves = 0;
  std::uint64_t promotions = 0;
  double write_latency_ms = 0.0;
  double read_latency_ms = 0.0;
  double promotion_latency_ms = 0.0;
  double maintenance_latency_ms = 0.0;

  double hit_rate() const {
    return reads == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(hits + misses);
  }
};

struct TierState {
  TierConfig config;
  std::uint64_t used = 0;
  std::vector<std::pair<BlockId, std::uint64_t>> resident;  // sorted by id
};

// Blocks spread over ordered tiers above a persistent backend. Every public
// operation is atomic with respect to the others.
class TieredStore {
 public:
  TieredStore(StoreOptions options, MountTable& backend);
  ~TieredStore();
  TieredStore(const TieredStore&) = delete;
  TieredStore& operator=(const TieredStore&) = delete;

  WriteReceipt write_block(const Block& block, std::span<const std::uint8_t> payload);
  std::pair<Blob, ReadReceipt> read_block(const BlockId& id);
  std::uint64_t free_space(Level tier) const;
  PromotionRecord promote_block(const BlockId& id, Level target);
  StoreMetrics metrics_snapshot() const;

  // Demotes victims out of `tier` (cascading downward) until it has at least
  // `target_free` bytes free. Background maintenance; never touches the
  // write path's receipts.
  std::vector<Move> reclaim(Level tier, std::uint64_t target_free);

  // Waits for pending asynchronous persistence and rethrows the first
  // failure it encountered.
  void flush();

  bool contains(const BlockId& id) const;
  std::optional<Level> locate(const BlockId& id) const;
  std::uint64_t block_size(const BlockId& id) const;
  std::vector<TierState> tier_states() const;
  std::vector<Level> tier_levels() const;
  const CostModel& cost_model() const { return cost_; }
  AllocatorKind allocator() const { return options_.allocator; }

  // Throws if used/capacity accounting or single residency is violated.
  void check_invariants() const;

 private:
  struct Entry {
    Block block;
    Level location = Level::kBackend;
    bool persisted = false;
    Blob payload;  // held while tier-resident
  };
  struct Tier {
    TierConfig config;
    std::uint64_t used = 0;
    std::unique_ptr<Evictor> evictor;
    std::unordered_map<BlockId, std::uint64_t, BlockIdHash> resident;
  };
  struct Plan;
  struct PersistJob {
    BlockId id;
    ObjectPath path;
    Blob payload;
  };

  std::optional<std::size_t> index_of(Level level) const;
  std::size_t require_tier(Level level) const;
  std::pair<BlockId, std::uint64_t> next_victim(Plan& plan, std::size_t tier) const;
  void make_room(Plan& plan, std::size_t tier, std::uint64_t needed) const;
  void apply(const std::vector<Move>& moves);
  void ensure_persisted(const std::vector<Move>& moves);
  void place(Entry& entry, std::size_t tier);
  void unplace(Entry& entry);
  Entry& entry_for(const BlockId& id);
  const Entry& entry_for(const BlockId& id) const;
  void persist_loop(std::stop_token stop);

  StoreOptions options_;
  MountTable& backend_;
  CostModel cost_;
  std::vector<Tier> tiers_;
  std::unordered_map<BlockId, Entry, BlockIdHash> entries_;
  StoreMetrics metrics_;
  mutable std::mutex mu_;

  std::mutex queue_mu_;
  std::condition_variable_any queue_cv_;
  std::condition_variable_any drained_cv_;
  std::deque<PersistJob> queue_;
  std::size_t in_flight_ = 0;
  std::optional<std::string> persist_error_;
  std::jthread worker_;
};

}  // namespace robocloud
