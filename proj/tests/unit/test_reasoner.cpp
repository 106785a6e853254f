#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "logtriage/reasoner.hpp"
#include "logtriage/rules.hpp"
#include "logtriage/simgen.hpp"
#include "test_support.hpp"

using namespace logtriage;

namespace {

PromptBundle prompts_for(const ApplicationBundle& app, const CriteriaSet& set) {
  const auto reduced = reduce_segment(Segment{app.app_id, 0, app.records}, HashEmbeddingProvider(),
                                      std::max<std::size_t>(app.records.size(), 1), ForestParams{});
  return build_prompts(load_profile(testing::fixture("ta_profile.yaml").string()), set, reduced, app.enrichment);
}

class FixedBackend final : public ReasonerBackend {
 public:
  explicit FixedBackend(std::string text) : text_(std::move(text)) {}
  std::string name() const override { return "fixed"; }
  BackendKind kind() const override { return BackendKind::mock; }
  std::string complete(const PromptBundle&) const override { return text_; }

 private:
  std::string text_;
};

// Minimal chat endpoint: fails the first `failures` calls with 503.
class TestServer {
 public:
  TestServer(int failures, std::string content) : failures_(failures), content_(std::move(content)) {
    server_.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
      last_body_ = req.body;
      if (calls_++ < failures_) {
        res.status = 503;
        return;
      }
      nlohmann::json out;
      out["choices"][0]["message"]["content"] = content_;
      res.set_content(out.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~TestServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat"; }
  int calls() const { return calls_; }
  const std::string& last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  int failures_;
  std::string content_;
  std::string last_body_;
};

RemoteReasonerOptions remote_options(const std::string& url, int retries) {
  RemoteReasonerOptions o;
  o.endpoint = url;
  o.api_key = "test-key";
  o.max_retries = retries;
  o.backoff = std::chrono::milliseconds(1);
  o.timeout = std::chrono::seconds(5);
  return o;
}

}  // namespace

TEST_CASE("the mock reasoner is deterministic for a seed") {
  const auto corpus = generate_corpus(2, 0, 0, 3);
  const auto set = builtin_criteria(CriteriaSetName::baseline);
  const auto prompts = prompts_for(corpus.apps[0], set);
  const MockReasoner a(MockOptions{0.3, 42});
  const MockReasoner b(MockOptions{0.3, 42});
  CHECK(a.complete(prompts) == b.complete(prompts));
  CHECK_THROWS_AS(MockReasoner(MockOptions{1.0, 0}), ConfigError);
}

TEST_CASE("noiseless mock stage verdicts equal the enacted stages") {
  CorpusOptions opts;
  opts.max_benign_records = 300;
  const auto corpus = generate_corpus(12, 4, 8, 17, opts);
  const auto set = builtin_criteria(CriteriaSetName::baseline);
  const MockReasoner mock(MockOptions{0.0, 1});
  for (std::size_t i = 0; i < corpus.apps.size(); ++i) {
    const auto& app = corpus.apps[i];
    const auto& spec = corpus.specs[i];
    const auto report = parse_report(invoke(mock, prompts_for(app, set)), set);
    for (Stage s : kAllStages) {
      const bool enacted = std::find(spec.stages_enacted.begin(), spec.stages_enacted.end(), s) != spec.stages_enacted.end();
      CHECK_MESSAGE(report.verdicts.value(stage_criterion_id(s)) == enacted, app.app_id << " " << stage_name(s));
    }
    if (spec.label == Category::compromised) {
      CHECK(report.verdicts.value(criterion_ids::kMultipleStages));
    }
  }
}

TEST_CASE("mock noise flips verdicts at the configured rate") {
  const auto corpus = generate_corpus(1, 0, 0, 5);
  const auto set = builtin_criteria(CriteriaSetName::baseline);
  const auto prompts = prompts_for(corpus.apps[0], set);
  const auto clean = parse_report(MockReasoner(MockOptions{0.0, 0}).complete(prompts), set).verdicts;
  std::size_t flips = 0;
  const std::size_t trials = 200;
  for (std::size_t seed = 0; seed < trials; ++seed) {
    const auto noisy = parse_report(MockReasoner(MockOptions{0.1, seed}).complete(prompts), set).verdicts;
    for (const auto& v : noisy) flips += v.value != clean.value(v.criterion_id);
  }
  // Binomial(3000, 0.1): mean 300, sd ~16.4
  CHECK(flips > 230);
  CHECK(flips < 370);
}

TEST_CASE("empty responses are rejected") {
  const PromptBundle p{"s", "u", 1};
  CHECK_THROWS_AS(invoke(FixedBackend("  \n"), p), EmptyResponse);
  CHECK(invoke(FixedBackend("ok"), p) == "ok");
}

TEST_CASE("the remote reasoner retries and then gives up") {
  SUBCASE("persistent 5xx exhausts the retries") {
    TestServer server(100, "unused");
    const RemoteReasoner r(remote_options(server.url(), 2));
    CHECK_THROWS_AS(r.complete(PromptBundle{"sys", "user", 2}), RemoteError);
    CHECK(server.calls() == 3);
  }
  SUBCASE("a transient failure is retried") {
    TestServer server(1, "# report");
    const RemoteReasoner r(remote_options(server.url(), 2));
    CHECK(r.complete(PromptBundle{"sys", "user", 2}) == "# report");
    CHECK(server.calls() == 2);
    const auto body = nlohmann::json::parse(server.last_body());
    CHECK(body["messages"][0]["role"] == "system");
    CHECK(body["messages"][1]["content"] == "user");
  }
}

TEST_CASE("result codes") {
  CHECK(is_success("0"));
  CHECK_FALSE(is_success("AADSTS7000222"));
  CHECK(!explain_result_code("AADSTS7000222").empty());
}

TEST_CASE("rule table on hand-built evidence") {
  Evidence ev;
  auto rec = [](std::int64_t ms, LogType t, std::string op, std::string ip, std::string res, std::string code = "0") {
    LogRecord r;
    r.ts = Timestamp{ms};
    r.app_id = "a";
    r.log_type = t;
    r.operation = std::move(op);
    r.ip = std::move(ip);
    r.resource = std::move(res);
    r.result_code = std::move(code);
    return r;
  };
  ev.records = {rec(1, LogType::signin, "Sign-in", "45.0.0.1", "Azure Key Vault"),
                rec(2, LogType::keyvault, "SecretList", "45.0.0.1", "Azure Key Vault"),
                rec(3, LogType::keyvault, "SecretGet", "45.0.0.1", "Azure Key Vault"),
                rec(4, LogType::signin, "Sign-in", "20.0.0.1", "Microsoft Graph Profile")};
  ev.enrichment.ip_details.push_back(IpDetail{"20.0.0.1", "x", "y", false, true, {}});
  ev.enrichment.ip_details.push_back(IpDetail{"45.0.0.1", "x", "y", false, false, {}});
  ev.enrichment.permissions.push_back(Permission{"Azure Key Vault", "Get", true});
  const auto v = evaluate_rules(ev);
  CHECK(v.stage(Stage::initial_access));
  CHECK(v.stage(Stage::credential_access));
  CHECK_FALSE(v.stage(Stage::defense_evasion));
  CHECK_FALSE(v.stage(Stage::execution));
  CHECK(v.stage_count() == 2);
  CHECK(v.extensive_permissions);
  CHECK_FALSE(v.all_flagged_ips_benign);
  CHECK(v.untrusted_ips == std::set<std::string>{"45.0.0.1"});
}
