#include "robocloud/mount_table.hpp"

#include <algorithm>
#include <mutex>

#include "robocloud/error.hpp"

namespace robocloud {

void MountTable::mount(const ObjectPath& prefix, const BackendDescriptor& descriptor) {
  mount(prefix, make_backend(descriptor));
}

void MountTable::mount(const ObjectPath& prefix, std::unique_ptr<Backend> backend) {
  std::unique_lock lock(mu_);
  for (const auto& [existing, b] : entries_) {
    if (existing.contains(prefix) || prefix.contains(existing)) {
      throw Error(ErrorCode::kOverlappingPrefix,
                  "overlapping prefix: " + prefix.str() + " vs " + existing.str());
    }
    if (b->descriptor().name == backend->descriptor().name) {
      throw Error(ErrorCode::kAlreadyExists,
                  "duplicate backend name: " + backend->descriptor().name);
    }
  }
  entries_.emplace(prefix, std::move(backend));
}

Resolved MountTable::resolve_locked(const ObjectPath& path) const {
  for (const auto& [prefix, backend] : entries_) {
    if (!prefix.contains(path)) continue;
    std::string rel = path.str().substr(prefix.is_root() ? 1 : prefix.str().size());
    if (!rel.empty() && rel.front() == '/') rel.erase(0, 1);
    return Resolved{backend.get(), std::move(rel)};
  }
  throw Error(ErrorCode::kUnmounted, "unmounted path: " + path.str());
}

Resolved MountTable::resolve(const ObjectPath& path) const {
  std::shared_lock lock(mu_);
  return resolve_locked(path);
}

namespace {
void require_object(const Resolved& r, const ObjectPath& path) {
  if (r.relative.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "path names a mount point, not an object: " + path.str());
  }
}
}  // namespace

PersistAck MountTable::persist(const ObjectPath& path,
                               std::span<const std::uint8_t> blob) {
  std::shared_lock lock(mu_);
  Resolved r = resolve_locked(path);
  require_object(r, path);
  r.backend->put(r.relative, blob);
  return PersistAck{path, r.backend->descriptor().name, blob.size(),
                    r.backend->latency_ms()};
}

Blob MountTable::fetch(const ObjectPath& path) const {
  std::shared_lock lock(mu_);
  Resolved r = resolve_locked(path);
  require_object(r, path);
  return r.backend->get(r.relative);
}

bool MountTable::exists(const ObjectPath& path) const {
  std::shared_lock lock(mu_);
  Resolved r = resolve_locked(path);
  return !r.relative.empty() && r.backend->exists(r.relative);
}

double MountTable::latency_ms(const ObjectPath& path) const {
  std::shared_lock lock(mu_);
  return resolve_locked(path).backend->latency_ms();
}

std::vector<ObjectPath> MountTable::list(const ObjectPath& prefix) const {
  std::shared_lock lock(mu_);
  std::vector<ObjectPath> out;
  for (const auto& [mount_prefix, backend] : entries_) {
    if (!mount_prefix.contains(prefix) && !prefix.contains(mount_prefix)) continue;
    for (const auto& rel : backend->list()) {
      ObjectPath full = mount_prefix.join(rel);
      if (prefix.contains(full)) out.push_back(std::move(full));
    }
  }
  std::sort(out.begin(), out.end(),
            [](const ObjectPath& a, const ObjectPath& b) { return a.str() < b.str(); });
  return out;
}

std::size_t MountTable::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<ObjectPath> MountTable::prefixes() const {
  std::shared_lock lock(mu_);
  std::vector<ObjectPath> out;
  for (const auto& [p, _] : entries_) out.push_back(p);
  return out;
}

}  // namespace robocloud
