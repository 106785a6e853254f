#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include "logtriage/common.hpp"

namespace logtriage {

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds backoff{250};  // doubled after every failed attempt
  std::chrono::seconds timeout{60};
};

struct HttpResult {
  std::string body;
  int attempts = 0;
};

/// POSTs a JSON body, retrying connection failures, 429 and 5xx responses.
/// Other 4xx statuses fail immediately. Throws RemoteError.
HttpResult post_json(const std::string& url, const std::string& body,
                     const std::vector<std::pair<std::string, std::string>>& headers,
                     const RetryPolicy& policy);

}  // namespace logtriage
