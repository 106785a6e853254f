#include <cstdlib>
#include <semaphore>

#include <json.hpp>

#include "logtriage/http_client.hpp"
#include "logtriage/reasoner.hpp"

namespace logtriage {

RemoteReasonerOptions RemoteReasonerOptions::from_env() {
  RemoteReasonerOptions options;
  if (const char* url = std::getenv("REASONER_ENDPOINT"); url != nullptr) options.endpoint = url;
  if (const char* key = std::getenv("REASONER_API_KEY"); key != nullptr) options.api_key = key;
  if (options.endpoint.empty()) throw ConfigError("REASONER_ENDPOINT is not set");
  return options;
}

struct RemoteReasoner::State {
  explicit State(std::size_t limit) : in_flight(static_cast<std::ptrdiff_t>(limit)) {}
  std::counting_semaphore<1024> in_flight;
};

RemoteReasoner::RemoteReasoner(RemoteReasonerOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) throw ConfigError("remote reasoner needs an endpoint");
  if (options_.max_in_flight == 0 || options_.max_in_flight > 1024) {
    throw ConfigError("remote reasoner max_in_flight must be in [1, 1024]");
  }
  if (options_.max_retries < 0) throw ConfigError("remote reasoner retries must be >= 0");
  state_ = std::make_unique<State>(options_.max_in_flight);
}

RemoteReasoner::~RemoteReasoner() = default;

std::string RemoteReasoner::complete(const PromptBundle& prompts) const {
  nlohmann::json request = {
      {"messages",
       {{{"role", "system"}, {"content", prompts.system_text}}, {{"role", "user"}, {"content", prompts.user_text}}}},
      {"temperature", options_.temperature},
  };
  if (!options_.model.empty()) request["model"] = options_.model;

  std::vector<std::pair<std::string, std::string>> headers;
  if (!options_.api_key.empty()) {
    headers.emplace_back("Authorization", "Bearer " + options_.api_key);
    headers.emplace_back("api-key", options_.api_key);
  }
  const RetryPolicy policy{options_.max_retries, options_.backoff, options_.timeout};
  const std::string body = request.dump();

  state_->in_flight.acquire();
  HttpResult result;
  try {
    result = post_json(options_.endpoint, body, headers, policy);
  } catch (...) {
    state_->in_flight.release();
    throw;
  }
  state_->in_flight.release();

  nlohmann::json response;
  try {
    response = nlohmann::json::parse(result.body);
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(std::string("reasoner response is not JSON: ") + e.what());
  }
  try {
    const auto& node = response.at(nlohmann::json::json_pointer(options_.response_path));
    if (!node.is_string()) throw RemoteError("reasoner response at " + options_.response_path + " is not a string");
    return node.get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError("reasoner response has no " + options_.response_path + ": " + e.what());
  }
}

}  // namespace logtriage
