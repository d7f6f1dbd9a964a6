#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "robocloud/backend.hpp"

namespace robocloud {

struct PersistAck {
  ObjectPath path;
  std::string backend;
  std::size_t bytes = 0;
  double modeled_latency_ms = 0.0;
};

struct Resolved {
  Backend* backend = nullptr;
  std::string relative;
};

// Transparent naming over heterogeneous backends: an object's unified path is
// its mount prefix followed by the path the backend itself stores it under.
class MountTable {
 public:
  MountTable() = default;
  MountTable(const MountTable&) = delete;
  MountTable& operator=(const MountTable&) = delete;

  void mount(const ObjectPath& prefix, const BackendDescriptor& descriptor);
  void mount(const ObjectPath& prefix, std::unique_ptr<Backend> backend);

  Resolved resolve(const ObjectPath& path) const;

  PersistAck persist(const ObjectPath& path, std::span<const std::uint8_t> blob);
  Blob fetch(const ObjectPath& path) const;
  bool exists(const ObjectPath& path) const;
  // Modeled latency of one access to the backend owning `path`.
  double latency_ms(const ObjectPath& path) const;

  // Persisted objects under `prefix`, sorted. Empty when nothing is mounted
  // there.
  std::vector<ObjectPath> list(const ObjectPath& prefix) const;

  std::size_t size() const;
  std::vector<ObjectPath> prefixes() const;

 private:
  Resolved resolve_locked(const ObjectPath& path) const;

  mutable std::shared_mutex mu_;
  std::map<ObjectPath, std::unique_ptr<Backend>> entries_;
};

}  // namespace robocloud
