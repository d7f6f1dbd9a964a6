// Kept in its own translation unit: httplib.h is heavy to compile.
#include <httplib.h>

#include <nlohmann/json.hpp>

#include "robocloud/error.hpp"
#include "robocloud/learning.hpp"

namespace robocloud {

ExternalEndpointExtractor::ExternalEndpointExtractor(ExtractorConfig config)
    : config_(std::move(config)) {
  config_.kind = ExtractorKind::kExternalEndpoint;
  config_.validate();
  vocabulary_.insert(config_.vocabulary.begin(), config_.vocabulary.end());
}

std::set<std::string> ExternalEndpointExtractor::extract(std::span<const std::uint8_t> frame) {
  std::string base = *config_.endpoint;
  if (base.find("://") == std::string::npos) base = "http://" + base;
  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());

  const std::string body(reinterpret_cast<const char*>(frame.data()), frame.size());
  auto res = client.Post("/extract", body, "application/octet-stream");
  if (!res) {
    throw Error(ErrorCode::kUnavailable,
                "extractor endpoint " + *config_.endpoint + " unreachable: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kUnavailable,
                "extractor endpoint returned HTTP " + std::to_string(res->status));
  }
  std::set<std::string> out;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    for (const auto& l : doc.at("labels")) {
      auto label = l.get<std::string>();
      if (vocabulary_.contains(label)) out.insert(std::move(label));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kUnavailable, "bad extractor response: " + std::string(e.what()));
  }
  return out;
}

}  // namespace robocloud
