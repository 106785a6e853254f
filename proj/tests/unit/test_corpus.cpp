#include <doctest.h>

#include <fstream>

#include <json.hpp>

#include "logtriage/corpus.hpp"
#include "test_support.hpp"

using namespace logtriage;
using logtriage::testing::TempDir;

namespace {

LogRecord record(std::int64_t ms, LogType type = LogType::signin, std::string ip = "20.1.2.3") {
  LogRecord r;
  r.ts = Timestamp{ms};
  r.app_id = "app-1";
  r.log_type = type;
  r.ip = std::move(ip);
  r.operation = "Sign-in";
  r.resource = "Microsoft Graph";
  r.result_code = "0";
  return r;
}

}  // namespace

TEST_CASE("timestamps round-trip through ISO-8601") {
  const Timestamp ts = parse_timestamp("2024-02-23T10:15:30.250Z");
  CHECK(format_timestamp(ts) == "2024-02-23T10:15:30.250Z");
  CHECK(format_date(ts) == "2024-02-23");
  CHECK_THROWS_AS(parse_timestamp("yesterday"), ParseError);
}

TEST_CASE("ip validation") {
  CHECK(is_valid_ip("10.0.0.1"));
  CHECK(is_valid_ip("2001:db8::1"));
  CHECK_FALSE(is_valid_ip("300.1.1.1"));
  CHECK_FALSE(is_valid_ip("not-an-ip"));
  CHECK_FALSE(is_valid_ip(""));
}

TEST_CASE("log records serialize and parse back") {
  LogRecord r = record(1706745600000, LogType::keyvault);
  r.operation = "SecretGet";
  r.extra["secret"] = "ContosoAppOfficeKey";
  CHECK(parse_log_line(serialize_log_record(r)) == r);
}

TEST_CASE("unknown log types map to other") {
  CHECK(log_type_from_string("signin") == LogType::signin);
  CHECK(log_type_from_string("firewall") == LogType::other);
}

TEST_CASE("a line without app_id is rejected with its line number") {
  TempDir dir("corpus");
  const auto path = (dir.path() / "signin.jsonl").string();
  auto j = nlohmann::json::parse(serialize_log_record(record(1706745600000)));
  j.erase("app_id");
  write_file(path, j.dump() + "\n" + serialize_log_record(record(1706745601000)) + "\n");
  try {
    load_log_file(path);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("app_id") != std::string::npos);
  }
}

TEST_CASE("malformed ip fields are kept as empty") {
  auto j = nlohmann::json::parse(serialize_log_record(record(1706745600000)));
  j["ip"] = "999.1.1.1";
  CHECK(parse_log_line(j.dump()).ip.empty());
}

TEST_CASE("duplicate ip details are rejected naming the ip") {
  TempDir dir("enrich");
  EnrichmentBundle b;
  b.ip_details.push_back(IpDetail{"45.1.2.3", "Oslo", "Example ISP", true, false, {}});
  write_enrichments(dir.str(), b);
  const auto path = (dir.path() / kIpDetailsFile).string();
  const std::string line = read_file(path);
  write_file(path, line + line);
  try {
    load_enrichments(dir.str());
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("45.1.2.3") != std::string::npos);
  }
}

TEST_CASE("enrichment round trip") {
  TempDir dir("enrich");
  EnrichmentBundle b;
  b.ip_details.push_back(
      IpDetail{"20.1.1.1", "Dublin", "Azure", false, true, {ResourceAccess{"Azure Key Vault", Sensitivity::high}}});
  b.permissions.push_back(Permission{"Azure Key Vault", "Secrets.Get", true});
  b.credentials.push_back(Credential{"cred-1", Timestamp{1700000000000}, std::nullopt, Timestamp{1800000000000}});
  b.alerts.push_back(Alert{"a-1", "Unfamiliar sign-in", "medium"});
  write_enrichments(dir.str(), b);
  CHECK(load_enrichments(dir.str()) == b);
}

TEST_CASE("labels round trip and reject unknown codes") {
  TempDir dir("labels");
  const auto path = (dir.path() / "labels.json").string();
  const std::map<std::string, Category> labels{{"a", Category::compromised}, {"b", Category::benign_suspicious}};
  write_labels(path, labels);
  CHECK(load_labels(path) == labels);
  CHECK_THROWS(category_from_code(3));
}

TEST_CASE("segmentation splits at the cap") {
  auto make = [](std::size_t n) {
    std::vector<LogRecord> rs;
    rs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) rs.push_back(record(static_cast<std::int64_t>(i)));
    return rs;
  };
  SUBCASE("80,000 records give two full segments") {
    const auto segs = segment_application(make(80000), 40000);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].records.size() == 40000);
    CHECK(segs[1].records.size() == 40000);
  }
  SUBCASE("85,000 records give 40,000/40,000/5,000") {
    const auto segs = segment_application(make(85000), 40000);
    REQUIRE(segs.size() == 3);
    CHECK(segs[2].records.size() == 5000);
    CHECK(segs[2].index == 2);
  }
  SUBCASE("segments are contiguous and chronological") {
    const auto recs = make(1003);
    const auto segs = segment_application(recs, 100);
    CHECK(segs.size() == 11);
    std::size_t pos = 0;
    for (const auto& s : segs) {
      CHECK(!s.records.empty());
      CHECK(s.records.size() <= 100);
      for (const auto& r : s.records) CHECK(r == recs[pos++]);
    }
    CHECK(pos == recs.size());
  }
  CHECK_THROWS_AS(segment_application(make(3), 0), ConfigError);
}

TEST_CASE("sign-in counting") {
  std::vector<LogRecord> rs{record(1), record(2, LogType::msgraph), record(3)};
  CHECK(count_signins(rs) == 2);
}

TEST_CASE("derived seeds depend on every input") {
  CHECK(derive_seed(1, "a", 0) == derive_seed(1, "a", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
  CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
}
