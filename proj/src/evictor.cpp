#include <list>
#include <mutex>
#include <unordered_map>

#include "robocloud/error.hpp"
#include "robocloud/tiered_store.hpp"

namespace robocloud {

namespace {

// Recency list; front is the next victim. FIFO ignores accesses.
class ListEvictor : public Evictor {
 public:
  explicit ListEvictor(bool refresh_on_access) : refresh_(refresh_on_access) {}

  void on_insert(const BlockId& id) override {
    on_remove(id);
    order_.push_back(id);
    where_[id] = std::prev(order_.end());
  }

  void on_access(const BlockId& id) override {
    if (!refresh_) return;
    auto it = where_.find(id);
    if (it == where_.end()) return;
    order_.splice(order_.end(), order_, it->second);
  }

  void on_remove(const BlockId& id) override {
    auto it = where_.find(id);
    if (it == where_.end()) return;
    order_.erase(it->second);
    where_.erase(it);
  }

  void visit_victims(const std::function<bool(const BlockId&)>& fn) const override {
    for (const auto& id : order_) {
      if (!fn(id)) return;
    }
  }

 private:
  bool refresh_;
  std::list<BlockId> order_;
  std::unordered_map<BlockId, std::list<BlockId>::iterator, BlockIdHash> where_;
};

struct Registry {
  std::mutex mu;
  std::unordered_map<std::string, EvictorFactory> factories{
      {"lru", [] { return std::make_unique<ListEvictor>(true); }},
      {"fifo", [] { return std::make_unique<ListEvictor>(false); }},
  };
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_evictor(const std::string& name, EvictorFactory factory) {
  if (name.empty() || !factory) {
    throw Error(ErrorCode::kInvalidArgument, "evictor needs a name and a factory");
  }
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[name] = std::move(factory);
}

bool evictor_registered(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  return r.factories.contains(name);
}

std::unique_ptr<Evictor> make_evictor(const std::string& name) {
  EvictorFactory factory;
  {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    auto it = r.factories.find(name);
    if (it == r.factories.end()) {
      throw Error(ErrorCode::kInvalidArgument, "unknown evictor: " + name);
    }
    factory = it->second;
  }
  return factory();
}

}  // namespace robocloud
