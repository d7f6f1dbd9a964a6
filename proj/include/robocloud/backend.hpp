#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace robocloud {

using Blob = std::vector<std::uint8_t>;

// Slash-separated path in the unified namespace. Always absolute, with no
// empty, "." or ".." segments once constructed.
class ObjectPath {
 public:
  ObjectPath() : text_("/") {}
  explicit ObjectPath(std::string_view raw);

  const std::string& str() const { return text_; }
  std::vector<std::string> segments() const;
  bool is_root() const { return text_ == "/"; }

  // True if `other` equals this path or lies beneath it, segment-wise.
  bool contains(const ObjectPath& other) const;

  // Appends a relative "a/b" path.
  ObjectPath join(std::string_view relative) const;

  friend auto operator<=>(const ObjectPath&, const ObjectPath&) = default;

 private:
  std::string text_;
};

enum class BackendKind { kInMemoryMock, kLocalDirectory, kDelayedMock };

std::string to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view name);

struct BackendDescriptor {
  std::string name;
  BackendKind kind = BackendKind::kInMemoryMock;
  std::filesystem::path root;     // local-directory
  double latency_ms = 0.0;        // delayed-mock
  bool fail_writes = false;       // fault injection for any kind
};

// One persistent store beneath the tiers. Paths given to a backend are
// relative to its mount point ("x/y"). Each call is atomic per path.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual void put(const std::string& relative, std::span<const std::uint8_t> bytes) = 0;
  virtual Blob get(const std::string& relative) const = 0;
  virtual bool exists(const std::string& relative) const = 0;
  // Sorted relative paths of every stored object.
  virtual std::vector<std::string> list() const = 0;

  // Injected per-operation latency charged to the modeled clock.
  virtual double latency_ms() const { return 0.0; }

  const BackendDescriptor& descriptor() const { return descriptor_; }

 protected:
  explicit Backend(BackendDescriptor d) : descriptor_(std::move(d)) {}
  void check_writable(const std::string& relative) const;

 private:
  BackendDescriptor descriptor_;
};

class InMemoryBackend : public Backend {
 public:
  explicit InMemoryBackend(BackendDescriptor d) : Backend(std::move(d)) {}

  void put(const std::string& relative, std::span<const std::uint8_t> bytes) override;
  Blob get(const std::string& relative) const override;
  bool exists(const std::string& relative) const override;
  std::vector<std::string> list() const override;

 private:
  mutable std::mutex mu_;
  std::map<std::string, Blob> objects_;
};

class DelayedBackend : public InMemoryBackend {
 public:
  explicit DelayedBackend(BackendDescriptor d) : InMemoryBackend(std::move(d)) {}
  double latency_ms() const override { return descriptor().latency_ms; }
};

// One file per object at root/relative, bytes written verbatim.
class LocalDirectoryBackend : public Backend {
 public:
  explicit LocalDirectoryBackend(BackendDescriptor d);

  void put(const std::string& relative, std::span<const std::uint8_t> bytes) override;
  Blob get(const std::string& relative) const override;
  bool exists(const std::string& relative) const override;
  std::vector<std::string> list() const override;

 private:
  std::filesystem::path file_for(const std::string& relative) const;

  mutable std::mutex mu_;
};

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor);

}  // namespace robocloud
