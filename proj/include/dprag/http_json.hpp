#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

namespace dprag {

struct HttpEndpoint {
  // "http://host:port", no trailing slash.
  std::string base_url;
  std::chrono::milliseconds timeout{30000};
};

// Single JSON round trip. Connection failures and 5xx responses throw
// Error{kTransport} (retryable); other non-200 statuses and unparsable bodies
// throw Error{kProviderUnavailable}.
nlohmann::json http_post_json(const HttpEndpoint& endpoint,
                              const std::string& path,
                              const nlohmann::json& body);
nlohmann::json http_get_json(const HttpEndpoint& endpoint,
                             const std::string& path);

}  // namespace dprag
