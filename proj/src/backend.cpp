#include "robocloud/backend.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <sstream>

#include "robocloud/error.hpp"

namespace robocloud {

namespace fs = std::filesystem;

ObjectPath::ObjectPath(std::string_view raw) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t next = raw.find('/', pos);
    if (next == std::string_view::npos) next = raw.size();
    std::string_view seg = raw.substr(pos, next - pos);
    if (seg == "..") {
      throw Error(ErrorCode::kInvalidArgument,
                  "path traversal not allowed: " + std::string(raw));
    }
    if (!seg.empty() && seg != ".") {
      out += '/';
      out += seg;
    }
    pos = next + 1;
  }
  text_ = out.empty() ? "/" : out;
}

std::vector<std::string> ObjectPath::segments() const {
  std::vector<std::string> segs;
  std::istringstream in(text_);
  std::string seg;
  while (std::getline(in, seg, '/')) {
    if (!seg.empty()) segs.push_back(seg);
  }
  return segs;
}

bool ObjectPath::contains(const ObjectPath& other) const {
  if (is_root()) return true;
  if (other.text_.size() < text_.size()) return false;
  if (other.text_.compare(0, text_.size(), text_) != 0) return false;
  return other.text_.size() == text_.size() || other.text_[text_.size()] == '/';
}

ObjectPath ObjectPath::join(std::string_view relative) const {
  return ObjectPath(text_ + "/" + std::string(relative));
}

std::string to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::kInMemoryMock: return "in-memory-mock";
    case BackendKind::kLocalDirectory: return "local-directory";
    case BackendKind::kDelayedMock: return "delayed-mock";
  }
  return "unknown";
}

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "in-memory-mock") return BackendKind::kInMemoryMock;
  if (name == "local-directory") return BackendKind::kLocalDirectory;
  if (name == "delayed-mock") return BackendKind::kDelayedMock;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown backend kind: " + std::string(name));
}

void Backend::check_writable(const std::string& relative) const {
  if (descriptor_.fail_writes) {
    throw Error(ErrorCode::kBackendFailure,
                "backend " + descriptor_.name + " rejected write of " + relative);
  }
}

void InMemoryBackend::put(const std::string& relative,
                          std::span<const std::uint8_t> bytes) {
  check_writable(relative);
  std::lock_guard lock(mu_);
  objects_[relative] = Blob(bytes.begin(), bytes.end());
}

Blob InMemoryBackend::get(const std::string& relative) const {
  std::lock_guard lock(mu_);
  auto it = objects_.find(relative);
  if (it == objects_.end()) {
    throw Error(ErrorCode::kNotFound, "missing object: " + relative);
  }
  return it->second;
}

bool InMemoryBackend::exists(const std::string& relative) const {
  std::lock_guard lock(mu_);
  return objects_.contains(relative);
}

std::vector<std::string> InMemoryBackend::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  out.reserve(objects_.size());
  for (const auto& [k, _] : objects_) out.push_back(k);
  return out;
}

LocalDirectoryBackend::LocalDirectoryBackend(BackendDescriptor d)
    : Backend(std::move(d)) {
  if (descriptor().root.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "local-directory backend needs a root: " + descriptor().name);
  }
  fs::create_directories(descriptor().root);
}

fs::path LocalDirectoryBackend::file_for(const std::string& relative) const {
  return descriptor().root / fs::path(relative);
}

void LocalDirectoryBackend::put(const std::string& relative,
                                std::span<const std::uint8_t> bytes) {
  check_writable(relative);
  std::lock_guard lock(mu_);
  const fs::path target = file_for(relative);
  fs::create_directories(target.parent_path());
  // Write to a sibling and rename so readers never observe a torn file.
  fs::path tmp = target;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error(ErrorCode::kBackendFailure, "write failed: " + target.string());
    }
  }
  fs::rename(tmp, target);
}

Blob LocalDirectoryBackend::get(const std::string& relative) const {
  std::lock_guard lock(mu_);
  std::ifstream in(file_for(relative), std::ios::binary);
  if (!in) throw Error(ErrorCode::kNotFound, "missing object: " + relative);
  return Blob(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool LocalDirectoryBackend::exists(const std::string& relative) const {
  std::lock_guard lock(mu_);
  return fs::is_regular_file(file_for(relative));
}

std::vector<std::string> LocalDirectoryBackend::list() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& entry : fs::recursive_directory_iterator(descriptor().root)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().extension() == ".partial") continue;
    out.push_back(fs::relative(entry.path(), descriptor().root).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::unique_ptr<Backend> make_backend(const BackendDescriptor& descriptor) {
  if (descriptor.name.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "backend name must not be empty");
  }
  switch (descriptor.kind) {
    case BackendKind::kInMemoryMock:
      return std::make_unique<InMemoryBackend>(descriptor);
    case BackendKind::kLocalDirectory:
      return std::make_unique<LocalDirectoryBackend>(descriptor);
    case BackendKind::kDelayedMock:
      if (descriptor.latency_ms < 0.0) {
        throw Error(ErrorCode::kInvalidArgument, "negative injected latency");
      }
      return std::make_unique<DelayedBackend>(descriptor);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown backend kind");
}

}  // namespace robocloud
