#include "robocloud/tiered_store.hpp"

#include <algorithm>
#include <set>
#include <unordered_set>

#include "robocloud/error.hpp"

namespace robocloud {

std::string to_string(Level level) {
  switch (level) {
    case Level::kMemory: return "memory";
    case Level::kSsd: return "ssd";
    case Level::kHdd: return "hdd";
    case Level::kBackend: return "backend";
  }
  return "unknown";
}

Level level_from_string(std::string_view name) {
  if (name == "memory") return Level::kMemory;
  if (name == "ssd") return Level::kSsd;
  if (name == "hdd") return Level::kHdd;
  if (name == "backend") return Level::kBackend;
  throw Error(ErrorCode::kInvalidArgument, "unknown tier: " + std::string(name));
}

std::string to_string(AllocatorKind kind) {
  return kind == AllocatorKind::kDefaultCascade ? "default-cascade" : "direct-write";
}

AllocatorKind allocator_from_string(std::string_view name) {
  if (name == "default-cascade" || name == "DefaultCascade") {
    return AllocatorKind::kDefaultCascade;
  }
  if (name == "direct-write" || name == "DirectWrite") return AllocatorKind::kDirectWrite;
  throw Error(ErrorCode::kInvalidArgument, "unknown allocator: " + std::string(name));
}

double LevelCost::read_ms(std::uint64_t bytes) const {
  return read_overhead_ms + 1000.0 * static_cast<double>(bytes) / throughput_bytes_per_s;
}

double LevelCost::write_ms(std::uint64_t bytes) const {
  return write_overhead_ms + 1000.0 * static_cast<double>(bytes) / throughput_bytes_per_s;
}

LevelCost default_cost(Level level) {
  switch (level) {
    case Level::kMemory: return {0.1, 0.1, 650.0 * kMB};
    case Level::kSsd: return {1.0, 1.0, 120.0 * kMB};
    case Level::kHdd: return {5.0, 5.0, 60.0 * kMB};
    case Level::kBackend: return {200.0, 200.0, 20.0 * kMB};
  }
  return {};
}

TierConfig default_tier(Level level, std::uint64_t capacity) {
  return TierConfig{level, capacity, default_cost(level)};
}

std::vector<TierConfig> default_tiers(std::uint64_t memory, std::uint64_t ssd,
                                      std::uint64_t hdd) {
  return {default_tier(Level::kMemory, memory), default_tier(Level::kSsd, ssd),
          default_tier(Level::kHdd, hdd)};
}

CostModel::CostModel(std::vector<TierConfig> tiers, LevelCost backend) {
  for (const auto& t : tiers) costs_[t.name] = t.cost;
  costs_[Level::kBackend] = backend;
}

const LevelCost& CostModel::cost(Level level) const {
  auto it = costs_.find(level);
  if (it == costs_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "no cost for level " + to_string(level));
  }
  return it->second;
}

double CostModel::move_ms(const Move& move) const {
  if (move.to == Level::kBackend) return 0.0;
  return cost(move.from).read_ms(move.bytes) + cost(move.to).write_ms(move.bytes);
}

double CostModel::write_latency_ms(const WriteReceipt& receipt) const {
  double total = 0.0;
  for (const auto& m : receipt.moves) total += move_ms(m);
  return total + cost(receipt.placed_tier).write_ms(receipt.bytes);
}

// Simulated occupancy used while a write is planned; nothing in the store is
// touched until the plan is complete.
struct TieredStore::Plan {
  std::vector<std::uint64_t> used;
  std::unordered_set<BlockId, BlockIdHash> taken;  // already chosen as victims
  // Blocks moved into each tier by this plan; evictable after the residents.
  std::vector<std::deque<std::pair<BlockId, std::uint64_t>>> arrivals;
  std::vector<Move> moves;

  explicit Plan(const std::vector<Tier>& tiers) : arrivals(tiers.size()) {
    for (const auto& t : tiers) used.push_back(t.used);
  }
};

namespace {
void validate_tiers(const std::vector<TierConfig>& tiers) {
  if (tiers.empty()) throw Error(ErrorCode::kInvalidArgument, "no tiers");
  std::set<Level> seen;
  for (std::size_t i = 0; i < tiers.size(); ++i) {
    const auto& t = tiers[i];
    if (t.name == Level::kBackend) {
      throw Error(ErrorCode::kInvalidArgument, "backend is not a tier");
    }
    if (!seen.insert(t.name).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate tier name: " + to_string(t.name));
    }
    if (i > 0 && t.name < tiers[i - 1].name) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tiers must be ordered memory -> ssd -> hdd");
    }
    if (t.capacity == 0) {
      throw Error(ErrorCode::kInvalidArgument,
                  "non-positive capacity for tier " + to_string(t.name));
    }
    if (t.cost.throughput_bytes_per_s <= 0.0 || t.cost.read_overhead_ms < 0.0 ||
        t.cost.write_overhead_ms < 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "invalid cost for tier " + to_string(t.name));
    }
  }
}
}  // namespace

TieredStore::TieredStore(StoreOptions options, MountTable& backend)
    : options_(std::move(options)),
      backend_(backend),
      cost_((validate_tiers(options_.tiers), options_.tiers), options_.backend_cost) {
  if (!evictor_registered(options_.evictor)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown evictor: " + options_.evictor);
  }
  if (options_.backend_cost.throughput_bytes_per_s <= 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "invalid backend cost");
  }
  for (const auto& cfg : options_.tiers) {
    tiers_.push_back(Tier{cfg, 0, make_evictor(options_.evictor), {}});
  }
  if (options_.persist == PersistMode::kAsynchronous) {
    worker_ = std::jthread([this](std::stop_token st) { persist_loop(st); });
  }
}

TieredStore::~TieredStore() {
  if (worker_.joinable()) {
    worker_.request_stop();
    queue_cv_.notify_all();
  }
}

std::optional<std::size_t> TieredStore::index_of(Level level) const {
  for (std::size_t i = 0; i < tiers_.size(); ++i) {
    if (tiers_[i].config.name == level) return i;
  }
  return std::nullopt;
}

std::size_t TieredStore::require_tier(Level level) const {
  auto idx = index_of(level);
  if (!idx) throw Error(ErrorCode::kNotFound, "unknown tier: " + to_string(level));
  return *idx;
}

TieredStore::Entry& TieredStore::entry_for(const BlockId& id) {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw Error(ErrorCode::kNotFound, "unknown block: " + id.str());
  return it->second;
}

const TieredStore::Entry& TieredStore::entry_for(const BlockId& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) throw Error(ErrorCode::kNotFound, "unknown block: " + id.str());
  return it->second;
}

std::pair<BlockId, std::uint64_t> TieredStore::next_victim(Plan& plan,
                                                           std::size_t tier) const {
  const auto& t = tiers_[tier];
  std::optional<BlockId> victim;
  t.evictor->visit_victims([&](const BlockId& id) {
    if (plan.taken.contains(id)) return true;
    victim = id;
    return false;
  });
  if (victim) {
    plan.taken.insert(*victim);
    return {*victim, t.resident.at(*victim)};
  }
  if (plan.arrivals[tier].empty()) {
    throw Error(ErrorCode::kOutOfSpace,
                "cannot free space in tier " + to_string(t.config.name));
  }
  auto arrived = plan.arrivals[tier].front();
  plan.arrivals[tier].pop_front();
  return arrived;
}

// Frees `needed` bytes in `tier` by choosing evictor victims. Each victim goes
// to the next tier that can hold it (recursively making room there first), or
// to the backend below the last tier. Deeper moves are therefore recorded
// before the moves that depend on them.
void TieredStore::make_room(Plan& plan, std::size_t tier, std::uint64_t needed) const {
  const auto& t = tiers_[tier];
  while (t.config.capacity - plan.used[tier] < needed) {
    auto [victim, size] = next_victim(plan, tier);
    plan.used[tier] -= size;

    std::optional<std::size_t> dest;
    for (std::size_t j = tier + 1; j < tiers_.size(); ++j) {
      if (tiers_[j].config.capacity >= size) {
        dest = j;
        break;
      }
    }
    if (dest) {
      make_room(plan, *dest, size);
      plan.used[*dest] += size;
      plan.arrivals[*dest].emplace_back(victim, size);
      plan.moves.push_back(Move{victim, t.config.name, tiers_[*dest].config.name, size});
    } else {
      plan.moves.push_back(Move{victim, t.config.name, Level::kBackend, size});
    }
  }
}

void TieredStore::place(Entry& entry, std::size_t tier) {
  auto& t = tiers_[tier];
  t.resident.emplace(entry.block.id, entry.block.size);
  t.used += entry.block.size;
  t.evictor->on_insert(entry.block.id);
  entry.location = t.config.name;
}

void TieredStore::unplace(Entry& entry) {
  if (entry.location == Level::kBackend) return;
  auto& t = tiers_[require_tier(entry.location)];
  t.resident.erase(entry.block.id);
  t.used -= entry.block.size;
  t.evictor->on_remove(entry.block.id);
  entry.location = Level::kBackend;
}

void TieredStore::ensure_persisted(const std::vector<Move>& moves) {
  for (const auto& m : moves) {
    if (m.to != Level::kBackend) continue;
    Entry& e = entry_for(m.block);
    if (e.persisted) continue;
    backend_.persist(e.block.payload_ref, e.payload);
    e.persisted = true;
  }
}

void TieredStore::apply(const std::vector<Move>& moves) {
  for (const auto& m : moves) {
    Entry& e = entry_for(m.block);
    unplace(e);
    if (m.to == Level::kBackend) {
      e.payload.clear();
      e.payload.shrink_to_fit();
    } else {
      place(e, require_tier(m.to));
    }
  }
}

WriteReceipt TieredStore::write_block(const Block& block,
                                      std::span<const std::uint8_t> payload) {
  std::unique_lock lock(mu_);
  if (block.size == 0) throw Error(ErrorCode::kInvalidArgument, "block size must be > 0");
  if (entries_.contains(block.id)) {
    throw Error(ErrorCode::kAlreadyExists, "duplicate block id: " + block.id.str());
  }
  std::uint64_t max_capacity = 0;
  for (const auto& t : tiers_) max_capacity = std::max(max_capacity, t.config.capacity);
  if (block.size > max_capacity) {
    throw Error(ErrorCode::kOutOfSpace,
                "block " + block.id.str() + " larger than every tier");
  }

  Plan plan(tiers_);
  std::size_t target = 0;

  if (options_.allocator == AllocatorKind::kDefaultCascade) {
    while (tiers_[target].config.capacity < block.size) ++target;
    make_room(plan, target, block.size);
  } else {
    std::optional<std::size_t> with_space;
    for (std::size_t i = 0; i < tiers_.size(); ++i) {
      if (tiers_[i].config.capacity - tiers_[i].used >= block.size) {
        with_space = i;
        break;
      }
    }
    if (with_space) {
      target = *with_space;
    } else {
      // No tier has room: demote straight from the lowest tier that can hold
      // the block to the backend.
      target = tiers_.size() - 1;
      while (tiers_[target].config.capacity < block.size) --target;
      const auto& t = tiers_[target];
      while (t.config.capacity - plan.used[target] < block.size) {
        auto [victim, size] = next_victim(plan, target);
        plan.used[target] -= size;
        plan.moves.push_back(Move{victim, t.config.name, Level::kBackend, size});
      }
    }
  }

  // Everything that can fail happens before the first mutation.
  Entry entry{block, Level::kBackend, false, Blob(payload.begin(), payload.end())};
  ensure_persisted(plan.moves);
  if (options_.persist == PersistMode::kSynchronous) {
    backend_.persist(block.payload_ref, payload);
    entry.persisted = true;
  }

  apply(plan.moves);
  auto [it, _] = entries_.emplace(block.id, std::move(entry));
  place(it->second, target);

  WriteReceipt receipt{block.id, block.size, tiers_[target].config.name,
                       std::move(plan.moves), 0.0};
  receipt.modeled_latency_ms = cost_.write_latency_ms(receipt);
  metrics_.writes += 1;
  metrics_.total_moves += receipt.moves.size();
  metrics_.write_latency_ms += receipt.modeled_latency_ms;

  if (options_.persist == PersistMode::kAsynchronous) {
    std::lock_guard q(queue_mu_);
    queue_.push_back(PersistJob{block.id, block.payload_ref, it->second.payload});
    queue_cv_.notify_one();
  }
  return receipt;
}

namespace {
double backend_overhead(const LevelCost& base, double injected) {
  return injected > 0.0 ? injected : base.read_overhead_ms;
}
}  // namespace

std::pair<Blob, ReadReceipt> TieredStore::read_block(const BlockId& id) {
  std::unique_lock lock(mu_);
  Entry& e = entry_for(id);
  ReadReceipt receipt;
  receipt.block_id = id;
  receipt.source = e.location;
  receipt.hit = e.location != Level::kBackend;
  Blob payload;

  if (receipt.hit) {
    auto& t = tiers_[require_tier(e.location)];
    t.evictor->on_access(id);
    receipt.modeled_latency_ms = t.config.cost.read_ms(e.block.size);
    payload = e.payload;
    metrics_.hits += 1;
  } else {
    payload = backend_.fetch(e.block.payload_ref);
    LevelCost c = cost_.cost(Level::kBackend);
    // A backend with injected latency replaces the configured overhead.
    c.read_overhead_ms = backend_overhead(c, backend_.latency_ms(e.block.payload_ref));
    receipt.modeled_latency_ms = c.read_ms(e.block.size);
    metrics_.misses += 1;

    for (std::size_t i = 0; i < tiers_.size(); ++i) {
      auto& t = tiers_[i];
      if (t.config.capacity - t.used < e.block.size) continue;
      e.payload = payload;
      place(e, i);
      receipt.promoted_to = t.config.name;
      metrics_.promotions += 1;
      metrics_.promotion_latency_ms += t.config.cost.write_ms(e.block.size);
      break;
    }
  }
  metrics_.reads += 1;
  metrics_.read_latency_ms += receipt.modeled_latency_ms;
  return {std::move(payload), receipt};
}

std::uint64_t TieredStore::free_space(Level tier) const {
  std::lock_guard lock(mu_);
  const auto& t = tiers_[require_tier(tier)];
  return t.config.capacity - t.used;
}

PromotionRecord TieredStore::promote_block(const BlockId& id, Level target) {
  std::lock_guard lock(mu_);
  Entry& e = entry_for(id);
  const std::size_t ti = require_tier(target);
  PromotionRecord rec{id, e.location, target, false, {}, 0.0};

  if (e.location == target) {
    rec.reason = "already resident";
    return rec;
  }
  if (e.location != Level::kBackend && e.location < target) {
    rec.reason = "already in a higher tier";
    return rec;
  }
  auto& t = tiers_[ti];
  if (t.config.capacity - t.used < e.block.size) {
    rec.reason = "insufficient space";
    return rec;
  }

  if (e.location == Level::kBackend) {
    e.payload = backend_.fetch(e.block.payload_ref);
    LevelCost c = cost_.cost(Level::kBackend);
    c.read_overhead_ms = backend_overhead(c, backend_.latency_ms(e.block.payload_ref));
    rec.modeled_latency_ms = c.read_ms(e.block.size) + t.config.cost.write_ms(e.block.size);
  } else {
    rec.modeled_latency_ms =
        cost_.move_ms(Move{id, e.location, target, e.block.size});
    unplace(e);
  }
  place(e, ti);
  rec.promoted = true;
  metrics_.promotions += 1;
  metrics_.promotion_latency_ms += rec.modeled_latency_ms;
  return rec;
}

std::vector<Move> TieredStore::reclaim(Level tier, std::uint64_t target_free) {
  std::lock_guard lock(mu_);
  const std::size_t ti = require_tier(tier);
  target_free = std::min(target_free, tiers_[ti].config.capacity);
  Plan plan(tiers_);
  make_room(plan, ti, target_free);
  ensure_persisted(plan.moves);
  apply(plan.moves);
  metrics_.total_moves += plan.moves.size();
  for (const auto& m : plan.moves) metrics_.maintenance_latency_ms += cost_.move_ms(m);
  return plan.moves;
}

StoreMetrics TieredStore::metrics_snapshot() const {
  std::lock_guard lock(mu_);
  return metrics_;
}

bool TieredStore::contains(const BlockId& id) const {
  std::lock_guard lock(mu_);
  return entries_.contains(id);
}

std::optional<Level> TieredStore::locate(const BlockId& id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second.location;
}

std::uint64_t TieredStore::block_size(const BlockId& id) const {
  std::lock_guard lock(mu_);
  return entry_for(id).block.size;
}

std::vector<TierState> TieredStore::tier_states() const {
  std::lock_guard lock(mu_);
  std::vector<TierState> out;
  for (const auto& t : tiers_) {
    TierState s{t.config, t.used, {t.resident.begin(), t.resident.end()}};
    std::sort(s.resident.begin(), s.resident.end());
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<Level> TieredStore::tier_levels() const {
  std::vector<Level> out;
  for (const auto& t : tiers_) out.push_back(t.config.name);
  return out;
}

void TieredStore::check_invariants() const {
  std::lock_guard lock(mu_);
  std::unordered_map<BlockId, int, BlockIdHash> seen;
  for (const auto& t : tiers_) {
    std::uint64_t sum = 0;
    for (const auto& [id, size] : t.resident) {
      sum += size;
      if (++seen[id] > 1) {
        throw Error(ErrorCode::kInvalidArgument, "block resident twice: " + id.str());
      }
      const auto& e = entry_for(id);
      if (e.location != t.config.name || e.block.size != size) {
        throw Error(ErrorCode::kInvalidArgument, "location mismatch for " + id.str());
      }
    }
    if (sum != t.used) {
      throw Error(ErrorCode::kInvalidArgument, "used != sum of sizes in " + to_string(t.config.name));
    }
    if (t.used > t.config.capacity) {
      throw Error(ErrorCode::kInvalidArgument, "capacity exceeded in " + to_string(t.config.name));
    }
  }
  for (const auto& [id, e] : entries_) {
    if (e.location == Level::kBackend && !e.persisted) {
      throw Error(ErrorCode::kInvalidArgument, "block lost: " + id.str());
    }
  }
}

void TieredStore::persist_loop(std::stop_token stop) {
  while (true) {
    PersistJob job;
    {
      std::unique_lock q(queue_mu_);
      queue_cv_.wait(q, stop, [&] { return !queue_.empty(); });
      if (queue_.empty()) return;  // stop requested and nothing left
      job = std::move(queue_.front());
      queue_.pop_front();
      ++in_flight_;
    }
    std::optional<std::string> failure;
    try {
      backend_.persist(job.path, job.payload);
    } catch (const std::exception& ex) {
      failure = ex.what();
    }
    {
      std::lock_guard lock(mu_);
      if (!failure) {
        auto it = entries_.find(job.id);
        if (it != entries_.end()) it->second.persisted = true;
      }
    }
    {
      std::lock_guard q(queue_mu_);
      if (failure && !persist_error_) persist_error_ = failure;
      --in_flight_;
    }
    drained_cv_.notify_all();
  }
}

void TieredStore::flush() {
  if (options_.persist == PersistMode::kAsynchronous) {
    std::unique_lock q(queue_mu_);
    drained_cv_.wait(q, [&] { return queue_.empty() && in_flight_ == 0; });
    if (persist_error_) {
      std::string msg = *persist_error_;
      persist_error_.reset();
      throw Error(ErrorCode::kBackendFailure, msg);
    }
  }
}

}  // namespace robocloud
