#include <doctest.h>

#include "logtriage/embedding.hpp"

using namespace logtriage;

namespace {

LogRecord sample(const std::string& ip) {
  LogRecord r;
  r.ts = Timestamp{1706745600000};
  r.app_id = "app-1";
  r.log_type = LogType::msgraph;
  r.ip = ip;
  r.operation = "GET /users";
  r.resource = "Microsoft Graph Directory";
  r.result_code = "0";
  return r;
}

}  // namespace

TEST_CASE("hash embeddings are deterministic and sized") {
  const HashEmbeddingProvider p(32);
  const std::vector<LogRecord> rs{sample("20.0.0.1"), sample("20.0.0.2")};
  const auto a = p.embed_batch(rs);
  const auto b = p.embed_batch(rs);
  CHECK(a == b);
  CHECK(a.rows() == 2);
  CHECK(a.dim() == 32);
  CHECK_THROWS_AS(HashEmbeddingProvider(0), ConfigError);
}

TEST_CASE("records differing only in ip embed differently") {
  Rng rng(11);
  for (int i = 0; i < 1000; ++i) {
    auto ip = [&] {
      return std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256)) + "." +
             std::to_string(rng.below(256)) + "." + std::to_string(rng.below(256));
    };
    const std::string a = ip();
    std::string b = ip();
    while (b == a) b = ip();
    CHECK(hash_embed(sample(a), 64) != hash_embed(sample(b), 64));
  }
}

TEST_CASE("the timestamp does not affect the embedding") {
  LogRecord a = sample("20.0.0.1");
  LogRecord b = a;
  b.ts = Timestamp{a.ts.millis + 3600000};
  CHECK(hash_embed(a, 64) == hash_embed(b, 64));
}

TEST_CASE("embedding matrices append rows of equal dimension") {
  EmbeddingMatrix m = EmbeddingMatrix::from_rows({{1, 2}, {3, 4}});
  m.append(std::vector<double>{5, 6});
  CHECK(m.rows() == 3);
  CHECK(m.row(2)[1] == 6);
  CHECK_THROWS_AS(m.append(std::vector<double>{1, 2, 3}), DimensionMismatch);
}
