#include "logtriage/http_client.hpp"

#include <thread>

#include "httplib.h"

namespace logtriage {

namespace {

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

UrlParts split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL lacks a scheme: '" + url + "'");
  const std::string scheme = to_lower(url.substr(0, scheme_end));
  if (scheme != "http" && scheme != "https") throw ConfigError("unsupported URL scheme '" + scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ConfigError("https endpoints need a build with OpenSSL");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  UrlParts parts;
  parts.origin = path_start == std::string::npos ? url : url.substr(0, path_start);
  parts.path = path_start == std::string::npos ? "/" : url.substr(path_start);
  return parts;
}

bool retryable(int status) {
  return status == 429 || status >= 500;
}

}  // namespace

HttpResult post_json(const std::string& url, const std::string& body,
                     const std::vector<std::pair<std::string, std::string>>& headers,
                     const RetryPolicy& policy) {
  const UrlParts parts = split_url(url);
  httplib::Client client(parts.origin);
  client.set_connection_timeout(policy.timeout);
  client.set_read_timeout(policy.timeout);
  client.set_write_timeout(policy.timeout);

  httplib::Headers hdrs;
  for (const auto& [k, v] : headers) hdrs.emplace(k, v);

  auto delay = policy.backoff;
  std::string last_error;
  const int attempts = std::max(0, policy.max_retries) + 1;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Post(parts.path, hdrs, body, "application/json");
    if (res && res->status >= 200 && res->status < 300) {
      return HttpResult{res->body, attempt};
    }
    if (res) {
      last_error = "HTTP " + std::to_string(res->status);
      if (!retryable(res->status)) {
        throw RemoteError("request to " + url + " failed: " + last_error);
      }
    } else {
      last_error = httplib::to_string(res.error());
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
  }
  throw RemoteError("request to " + url + " exhausted " + std::to_string(attempts) +
                    " attempts; last error: " + last_error);
}

}  // namespace logtriage
