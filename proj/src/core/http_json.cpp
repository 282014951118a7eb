#include "dprag/http_json.hpp"

#include <httplib.h>

#include "dprag/error.hpp"

namespace dprag {

namespace {

httplib::Client make_client(const HttpEndpoint& endpoint) {
  httplib::Client client(endpoint.base_url);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(
      endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(
      endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  return client;
}

nlohmann::json handle(const httplib::Result& result, const std::string& what) {
  if (!result) {
    throw Error(ErrorCode::kTransport,
                what + ": " + httplib::to_string(result.error()));
  }
  if (result->status >= 500) {
    throw Error(ErrorCode::kTransport,
                what + ": HTTP " + std::to_string(result->status));
  }
  if (result->status != 200) {
    throw Error(ErrorCode::kProviderUnavailable,
                what + ": HTTP " + std::to_string(result->status));
  }
  try {
    return nlohmann::json::parse(result->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProviderUnavailable,
                what + ": malformed JSON response: " + e.what());
  }
}

}  // namespace

nlohmann::json http_post_json(const HttpEndpoint& endpoint,
                              const std::string& path,
                              const nlohmann::json& body) {
  auto client = make_client(endpoint);
  auto result = client.Post(path, body.dump(), "application/json");
  return handle(result, "POST " + endpoint.base_url + path);
}

nlohmann::json http_get_json(const HttpEndpoint& endpoint,
                             const std::string& path) {
  auto client = make_client(endpoint);
  auto result = client.Get(path);
  return handle(result, "GET " + endpoint.base_url + path);
}

}  // namespace dprag
