// Copyright (c) 2026, The avikit Authors. All rights reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "avikit/core/digest.hpp"
#include "avikit/core/error.hpp"
#include "avikit/core/image_io.hpp"
#include "avikit/oracle/open.hpp"
#include "test_util.hpp"

namespace avikit {
namespace {

using namespace std::chrono_literals;

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::ConfigError;
}

class CountingTransport : public Transport {
 public:
  std::string generate(const OracleImage& image, std::string_view prompt) override {
    calls.fetch_add(1);
    std::this_thread::sleep_for(std::chrono::microseconds(delay_us));
    return image.digest().substr(0, 8) + "|" + std::string(prompt);
  }
  std::string id() const override { return "counting"; }
  std::atomic<int> calls{0};
  int delay_us = 0;
};

ImageBuf gray(std::uint8_t v, std::size_t n = 8) { return ImageBuf(n, n, v); }

TEST(Budget, ChildChargesParent) {
  QueryBudget parent(3);
  QueryBudget a(2, &parent), b(5, &parent);
  EXPECT_TRUE(a.try_consume());
  EXPECT_TRUE(a.try_consume());
  EXPECT_FALSE(a.try_consume());
  EXPECT_EQ(b.remaining(), 1u);
  EXPECT_TRUE(b.try_consume());
  EXPECT_FALSE(b.try_consume());
  EXPECT_EQ(b.used(), 1u);
  EXPECT_EQ(parent.used(), 3u);
  EXPECT_EQ(code_of([&] { b.consume(); }), ErrorCode::BudgetExhausted);
}

TEST(Oracle, CacheHitsDoNotConsumeBudget) {
  auto t = std::make_unique<CountingTransport>();
  auto* raw = t.get();
  OracleHandle h(std::move(t));
  QueryBudget budget(10);
  const auto r1 = h.query(gray(1), "p", &budget);
  const auto r2 = h.query(gray(1), "p", &budget);
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(budget.used(), 1u);
  EXPECT_EQ(raw->calls.load(), 1);
  h.query(gray(1), "q", &budget);
  EXPECT_EQ(budget.used(), 2u);
  EXPECT_EQ(h.stats().hits, 1u);
  EXPECT_EQ(h.stats().misses, 2u);
}

TEST(Oracle, ExhaustedBudgetStillServesCache) {
  OracleHandle h(std::make_unique<CountingTransport>());
  QueryBudget budget(1);
  h.query(gray(1), "p", &budget);
  EXPECT_NO_THROW(h.query(gray(1), "p", &budget));
  EXPECT_EQ(code_of([&] { h.query(gray(2), "p", &budget); }), ErrorCode::BudgetExhausted);
}

TEST(Oracle, BypassChargesAndCallsTransport) {
  auto t = std::make_unique<CountingTransport>();
  auto* raw = t.get();
  OracleHandle h(std::move(t));
  QueryBudget budget(5);
  const OracleImage img(gray(9));
  h.query(img, "p", &budget);
  h.query(img, "p", &budget, /*bypass_cache=*/true);
  EXPECT_EQ(budget.used(), 2u);
  EXPECT_EQ(raw->calls.load(), 2);
}

TEST(Oracle, ConcurrentWorkersNeverOverdraw) {
  auto t = std::make_unique<CountingTransport>();
  t->delay_us = 50;
  auto* raw = t.get();
  OracleHandle h(std::move(t), {.cache_dir = std::nullopt, .max_in_flight = 8});
  QueryBudget budget(100);
  std::atomic<int> exhausted{0};
  std::vector<std::thread> workers;
  for (int w = 0; w < 8; ++w) {
    workers.emplace_back([&, w] {
      for (int i = 0; i < 40; ++i) {
        try {
          // Half the keys collide across workers.
          h.query(gray(static_cast<std::uint8_t>(i % 2 == 0 ? i : 100 + w * 40 + i)), "p", &budget);
        } catch (const Error& e) {
          if (e.code() == ErrorCode::BudgetExhausted) exhausted.fetch_add(1);
        }
      }
    });
  }
  for (auto& th : workers) th.join();
  EXPECT_EQ(budget.used(), 100u);
  EXPECT_EQ(raw->calls.load(), 100);
  EXPECT_EQ(h.stats().misses, 100u);
  EXPECT_GT(exhausted.load(), 0);
}

TEST(Oracle, DiskCacheSurvivesHandlesAndHonoursEnv) {
  const auto dir = test::scratch_dir("oracle_cache");
  {
    OracleHandle h(std::make_unique<CountingTransport>(), {.cache_dir = dir});
    h.query(gray(3), "p");
  }
  auto t = std::make_unique<CountingTransport>();
  auto* raw = t.get();
  OracleHandle h(std::move(t), {.cache_dir = dir});
  QueryBudget budget(1);
  h.query(gray(3), "p", &budget);
  EXPECT_EQ(raw->calls.load(), 0);
  EXPECT_EQ(budget.used(), 0u);

  setenv("AVIBENCH_CACHE_DIR", (dir / "env").c_str(), 1);
  EXPECT_EQ(resolve_cache_dir(dir / "configured"), dir / "env");
  unsetenv("AVIBENCH_CACHE_DIR");
  EXPECT_EQ(resolve_cache_dir(dir / "configured"), dir / "configured");
}

TEST(Oracle, DigestIsContentAddressed) {
  ImageBuf a = gray(77, 12);
  const auto bytes = encode_png(a);
  EXPECT_EQ(OracleImage(decode_image(bytes)).digest(), OracleImage(a).digest());
  EXPECT_EQ(OracleImage(a).digest(), sha256_hex(bytes));
}

TEST(Reference, ThresholdExamples) {
  AnswerKey key;
  key.add("what color?", "red");
  auto h = make_reference_oracle(ThresholdMeanIntensity{0.9}, 0, key);
  EXPECT_EQ(h->query(gray(255), "what color?"), kWrongAnswer);
  EXPECT_EQ(h->query(gray(0), "what color?"), "red");
  EXPECT_EQ(h->query(gray(0), "unseen prompt"), kWrongAnswer);
  EXPECT_EQ(code_of([] { ReferenceTransport(ThresholdMeanIntensity{std::nan("")}, 0); }),
            ErrorCode::BadParameters);
}

TEST(Reference, LinearZeroWeightsNeverAdversarial) {
  AnswerKey key;
  key.add("q", "a");
  auto h = make_reference_oracle(LinearBoundary{std::vector<double>(8 * 8 * 3, 0.0), 0.0}, 0, key);
  for (int v : {0, 128, 255}) EXPECT_EQ(h->query(gray(static_cast<std::uint8_t>(v)), "q"), "a");
  auto bad = make_reference_oracle(LinearBoundary{std::vector<double>(5, 1.0), 0.0}, 0, key);
  EXPECT_EQ(code_of([&] { bad->query(gray(0), "q"); }), ErrorCode::BadParameters);
}

TEST(Reference, LinearDecision) {
  std::vector<double> w(8 * 8 * 3, 1.0 / (8 * 8 * 3));
  ReferenceTransport t(LinearBoundary{w, 0.5}, 0);
  EXPECT_TRUE(t.truthful(gray(127)));
  EXPECT_FALSE(t.truthful(gray(128)));
}

TEST(Reference, KeywordEchoAndLookup) {
  auto echo = make_reference_oracle(KeywordEcho{{"cat", "Dog"}}, 0);
  EXPECT_EQ(echo->query(gray(0), "Is the dog next to a cat?"), "dog cat");
  auto all = make_reference_oracle(KeywordEcho{}, 0);
  EXPECT_EQ(all->query(gray(0), "Say: hello, World"), "say hello world");

  LookupTable table;
  table.responses[OracleImage(gray(5)).digest()] = "five";
  auto lookup = make_reference_oracle(table, 0);
  EXPECT_EQ(lookup->query(gray(5), "x"), "five");
  EXPECT_EQ(lookup->query(gray(6), "x"), "UNKNOWN");
}

TEST(Reference, AnswerKeyJoinsSharedPrompts) {
  AnswerKey key;
  key.add("what?", "cat");
  key.add("what?", "dog");
  key.add("what?", "cat");
  EXPECT_EQ(key.answer("what?"), "cat, dog");
}

TEST(Open, ParsesSpecs) {
  OracleConfig cfg;
  EXPECT_EQ(open_oracle("ref:threshold:0.25", cfg)->id().rfind("ref:threshold:0.25", 0), 0u);
  EXPECT_EQ(open_oracle("ref:echo:a,b", cfg)->id(), "ref:echo:a:b#0");
  EXPECT_EQ(open_oracle("http://localhost:1/x/", cfg)->id(), "http:http://localhost:1/x");
  EXPECT_EQ(code_of([&] { open_oracle("ftp://x", cfg); }), ErrorCode::BadParameters);
  EXPECT_EQ(code_of([&] { open_oracle("ref:threshold:abc", cfg); }), ErrorCode::BadParameters);
  EXPECT_EQ(code_of([&] { open_oracle("ref:lookup:/nonexistent.json", cfg); }), ErrorCode::BadParameters);
}

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/generate", [this](const httplib::Request& req, httplib::Response& res) {
      const int n = ++calls_;
      last_auth_ = req.get_header_value("Authorization");
      const auto body = nlohmann::json::parse(req.body);
      last_request_ = body;
      const std::string mode = body["prompt"].get<std::string>();
      if (mode == "ok") {
        res.set_content(R"({"text":"fine"})", "application/json");
      } else if (mode == "malformed") {
        res.set_content("not json", "application/json");
      } else if (mode == "busy-once") {
        if (n == 1) {
          res.status = 429;
        } else {
          res.set_content(R"({"text":"after wait"})", "application/json");
        }
      } else if (mode == "bad-request") {
        res.status = 400;
      } else {
        res.status = 503;
      }
    });
    server_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"status":"ok"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }
  HttpTransport transport(int retries = 2) {
    RemoteOptions o;
    o.retries = retries;
    o.backoff = 1ms;
    o.timeout = 5s;
    o.bearer_token = "secret";
    return HttpTransport("http://127.0.0.1:" + std::to_string(port_), o);
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::string last_auth_;
  nlohmann::json last_request_;
};

TEST_F(HttpFixture, SuccessCarriesPngAndToken) {
  auto t = transport();
  const OracleImage img(gray(42));
  EXPECT_EQ(t.generate(img, "ok"), "fine");
  EXPECT_EQ(last_auth_, "Bearer secret");
  EXPECT_EQ(last_request_["max_new_tokens"], 128);
  const auto png = base64_decode(last_request_["image_b64"].get<std::string>());
  EXPECT_EQ(decode_image(png), gray(42));
  EXPECT_TRUE(t.health());
}

TEST_F(HttpFixture, MalformedBodyRetriedThenProtocolViolation) {
  auto t = transport(2);
  EXPECT_EQ(code_of([&] { t.generate(OracleImage(gray(1)), "malformed"); }), ErrorCode::ProtocolViolation);
  EXPECT_EQ(calls_.load(), 3);
}

TEST_F(HttpFixture, TooManyRequestsBacksOffAndRetries) {
  auto t = transport();
  EXPECT_EQ(t.generate(OracleImage(gray(1)), "busy-once"), "after wait");
  EXPECT_EQ(calls_.load(), 2);
}

TEST_F(HttpFixture, ClientErrorIsNotRetried) {
  auto t = transport();
  EXPECT_EQ(code_of([&] { t.generate(OracleImage(gray(1)), "bad-request"); }), ErrorCode::ProtocolViolation);
  EXPECT_EQ(calls_.load(), 1);
}

TEST_F(HttpFixture, ServerErrorIsTransportErrorAfterRetries) {
  auto t = transport(1);
  EXPECT_EQ(code_of([&] { t.generate(OracleImage(gray(1)), "down"); }), ErrorCode::TransportError);
  EXPECT_EQ(calls_.load(), 2);
}

TEST(Http, UnreachableServerIsTransportError) {
  RemoteOptions o;
  o.retries = 0;
  o.timeout = 1s;
  HttpTransport t("http://127.0.0.1:1", o);
  const auto code = code_of([&] { t.generate(OracleImage(gray(1)), "x"); });
  EXPECT_TRUE(code == ErrorCode::TransportError || code == ErrorCode::Timeout);
}

TEST(Subprocess, LineProtocolRoundTrip) {
  RemoteOptions o;
  o.timeout = 5s;
  o.backoff = 1ms;
  SubprocessTransport t(R"(while read -r line; do echo '{"text":"from child"}'; done)", o);
  EXPECT_EQ(t.generate(OracleImage(gray(1)), "a"), "from child");
  EXPECT_EQ(t.generate(OracleImage(gray(2)), "b"), "from child");
}

TEST(Subprocess, GarbageAndSilenceAreReported) {
  RemoteOptions o;
  o.timeout = 200ms;
  o.backoff = 1ms;
  o.retries = 1;
  SubprocessTransport garbage(R"(while read -r line; do echo nope; done)", o);
  EXPECT_EQ(code_of([&] { garbage.generate(OracleImage(gray(1)), "a"); }), ErrorCode::ProtocolViolation);
  SubprocessTransport silent("cat > /dev/null", o);
  EXPECT_EQ(code_of([&] { silent.generate(OracleImage(gray(1)), "a"); }), ErrorCode::Timeout);
  SubprocessTransport dead("exit 0", o);
  EXPECT_EQ(code_of([&] { dead.generate(OracleImage(gray(1)), "a"); }), ErrorCode::TransportError);
}

}  // namespace
}  // namespace avikit
