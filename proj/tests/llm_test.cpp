#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "expect_errc.hpp"
#include "support.hpp"
#include "trialsynth/llm.hpp"
#include "trialsynth/reasons.hpp"

namespace trialsynth {
namespace {

using namespace std::chrono_literals;

ClientOptions no_sleep(std::vector<std::chrono::milliseconds>* slept = nullptr) {
  ClientOptions o;
  o.sleep = [slept](std::chrono::milliseconds d) {
    if (slept) slept->push_back(d);
  };
  return o;
}

CompletionRequest req(std::string prompt) {
  CompletionRequest r;
  r.prompt = std::move(prompt);
  return r;
}

TEST(Complete, ScriptedQueue) {
  auto t = ScriptedTransport::of({"R1"});
  LlmClient client(t, no_sleep());
  EXPECT_EQ(client.complete(req("hello")), "R1");
  EXPECT_EQ(t->request_count(), 1u);
  EXPECT_EQ(t->requests()[0].prompt, "hello");
  EXPECT_ERRC(client.complete(req("again")), Errc::kTransportError);
}

TEST(Complete, RetriesTransientStatuses) {
  auto t = std::make_shared<ScriptedTransport>(
      std::vector<TransportReply>{{429, ""}, {429, ""}, {200, "ok"}});
  std::vector<std::chrono::milliseconds> slept;
  auto o = no_sleep(&slept);
  o.retry.max_attempts = 3;
  LlmClient client(t, o);
  EXPECT_EQ(client.complete(req("p")), "ok");
  EXPECT_EQ(t->request_count(), 3u);
  ASSERT_EQ(slept.size(), 2u);
  EXPECT_GE(slept[0], 250ms);
  EXPECT_LE(slept[0], 500ms);
  EXPECT_GE(slept[1], 500ms);
  EXPECT_LE(slept[1], 1000ms);
}

TEST(Complete, RetryCapExhausted) {
  auto t = std::make_shared<ScriptedTransport>(
      std::vector<TransportReply>{{503, ""}, {0, ""}, {500, ""}, {200, "late"}});
  auto o = no_sleep();
  o.retry.max_attempts = 3;
  LlmClient client(t, o);
  EXPECT_ERRC(client.complete(req("p")), Errc::kTransportError);
  EXPECT_EQ(t->request_count(), 3u);
}

TEST(Complete, NonTransientStatusIsNotRetried) {
  auto t = std::make_shared<ScriptedTransport>(
      std::vector<TransportReply>{{401, "bad key"}, {200, "ok"}});
  LlmClient client(t, no_sleep());
  EXPECT_ERRC(client.complete(req("p")), Errc::kTransportError);
  EXPECT_EQ(t->request_count(), 1u);
}

TEST(Complete, EmptyResponse) {
  auto t = ScriptedTransport::of({"  \n"});
  LlmClient client(t, no_sleep());
  EXPECT_ERRC(client.complete(req("p")), Errc::kEmptyResponse);
}

TEST(Complete, BudgetCheckedBeforeSending) {
  auto t = ScriptedTransport::of({"never"});
  LlmClient client(t, no_sleep());
  EXPECT_ERRC(client.complete(req(std::string(4 * 128'000 + 1, 'x'))), Errc::kBudgetExceeded);
  EXPECT_EQ(t->request_count(), 0u);
  EXPECT_EQ(client.complete(req(std::string(4 * 128'000, 'x'))), "never");
}

TEST(Complete, BackoffDoublesUpToCap) {
  ClientOptions o;
  o.retry.base_delay = 100ms;
  o.retry.max_delay = 1000ms;
  LlmClient client(ScriptedTransport::of({}), o);
  EXPECT_EQ(client.backoff_delay(0), 100ms);
  EXPECT_EQ(client.backoff_delay(3), 800ms);
  EXPECT_EQ(client.backoff_delay(4), 1000ms);
  EXPECT_EQ(client.backoff_delay(60), 1000ms);
}

// Counts concurrent sends to check the in-flight bound.
class SlowTransport : public Transport {
 public:
  TransportReply send(const CompletionRequest&) override {
    int now = ++active_;
    int seen = peak_.load();
    while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(20ms);
    --active_;
    return {200, "ok"};
  }
  int peak() const { return peak_; }

 private:
  std::atomic<int> active_{0};
  std::atomic<int> peak_{0};
};

TEST(Complete, InFlightBound) {
  auto t = std::make_shared<SlowTransport>();
  auto o = no_sleep();
  o.max_in_flight = 2;
  LlmClient client(t, o);
  {
    std::vector<std::jthread> threads;
    for (int i = 0; i < 8; ++i) threads.emplace_back([&] { client.complete(req("p")); });
  }
  EXPECT_LE(t->peak(), 2);
  EXPECT_GE(t->peak(), 1);
}

TEST(HashedTransport, LooksUpBySha256) {
  EXPECT_EQ(sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto t = std::make_shared<HashedTransport>(
      std::map<std::string, std::string>{{sha256_hex("p1"), "r1"}});
  LlmClient client(t, no_sleep());
  EXPECT_EQ(client.complete(req("p1")), "r1");
  EXPECT_ERRC(client.complete(req("p2")), Errc::kTransportError);
}

TEST(MockFixture, ScriptedFile) {
  auto t = load_mock_transport(testing::fixture("mock_retry.json"));
  auto o = no_sleep();
  o.retry.max_attempts = 3;
  LlmClient client(t, o);
  EXPECT_EQ(client.complete(req("p")), "ok");
  EXPECT_EQ(t->request_count(), 3u);
}

TEST(HttpTransport, PostsChatCompletion) {
  httplib::Server server;
  nlohmann::json seen_body;
  std::string seen_auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& r, httplib::Response& res) {
    seen_body = nlohmann::json::parse(r.body);
    seen_auth = r.get_header_value("Authorization");
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hi there"}}]})",
                    "application/json");
  });
  server.Post("/v1/fail/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 429;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::jthread loop([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  HttpOptions opts;
  opts.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
  opts.api_key = "test-key";
  HttpTransport transport(opts);
  CompletionRequest r = req("prompt text");
  r.max_output_tokens = 64;
  auto reply = transport.send(r);
  EXPECT_EQ(reply.status, 200);
  EXPECT_EQ(reply.content, "hi there");
  EXPECT_EQ(seen_auth, "Bearer test-key");
  EXPECT_EQ(seen_body["model"], "gpt-4o-mini");
  EXPECT_EQ(seen_body["temperature"], 1.0);
  EXPECT_EQ(seen_body["max_tokens"], 64);
  EXPECT_EQ(seen_body["messages"][0]["role"], "user");
  EXPECT_EQ(seen_body["messages"][0]["content"], "prompt text");

  opts.base_url += "/fail";
  EXPECT_EQ(HttpTransport(opts).send(r).status, 429);
  server.stop();
}

TEST(HttpTransport, UnreachableHostIsStatusZero) {
  HttpOptions opts;
  opts.base_url = "http://127.0.0.1:1/v1";
  opts.timeout = std::chrono::seconds(2);
  EXPECT_EQ(HttpTransport(opts).send(req("p")).status, 0);
}

TEST(ChatRequestBody, OmitsUnsetMaxTokens) {
  auto body = nlohmann::json::parse(chat_request_body(req("x")));
  EXPECT_FALSE(body.contains("max_tokens"));
}

TEST(ParseReasons, InlineAndMultiline) {
  auto inline_set = parse_reasons("1. A 2. B 3. C 4. D 5. E", "aspirin", Outcome::kSuccess);
  EXPECT_EQ(inline_set.reasons, (std::vector<std::string>{"A", "B", "C", "D", "E"}));
  auto lines = parse_reasons("Reasons:\n1. A\n2. B\n3. C\n4. D\n5. E\n", "aspirin",
                             Outcome::kSuccess);
  EXPECT_EQ(lines, inline_set);
  auto decimals = parse_reasons("1. Dose of 2.5 mg 2. B 3. C 4. D 5. E", "x", Outcome::kFailure);
  EXPECT_EQ(decimals.reasons[0], "Dose of 2.5 mg");
}

TEST(ParseReasons, Malformed) {
  EXPECT_ERRC(parse_reasons("1. A 2. B", "x", Outcome::kSuccess), Errc::kMalformedReasonList);
  EXPECT_ERRC(parse_reasons("no list here", "x", Outcome::kSuccess), Errc::kMalformedReasonList);
  EXPECT_ERRC(parse_reasons("1. A 2. B 3. C 4. D 5. E 6. F", "x", Outcome::kSuccess),
              Errc::kMalformedReasonList);
  EXPECT_ERRC(parse_reasons("1. A 2.  3. C 4. D 5. E", "x", Outcome::kSuccess),
              Errc::kMalformedReasonList);
}

TEST(ParseReasons, FormatRoundTrip) {
  auto set = testing::fixture_reasons(Outcome::kSuccess);
  EXPECT_EQ(parse_reasons(format_reasons(set), set.intervention, set.label), set);
}

TEST(ValidateSynthetic, AcceptsReport) {
  SyntheticIdCounter ids;
  auto t = validate_synthetic(
      "<clinical_study><intervention_name>aspirin</intervention_name>...</clinical_study>",
      "aspirin", Outcome::kSuccess, {}, ids);
  EXPECT_EQ(t.trial_id, "SYN-000001");
  EXPECT_EQ(ids.next(), "SYN-000002");
  EXPECT_NO_THROW(check_synthetic(t));
}

TEST(ValidateSynthetic, ScrubsLabelWords) {
  SyntheticIdCounter ids;
  auto t = validate_synthetic("<s><drug>Aspirin</drug><r>the trial failed</r></s>", "aspirin",
                              Outcome::kFailure, {}, ids);
  EXPECT_EQ(t.text, "<s><drug>Aspirin</drug><r>the trial</r></s>");
  EXPECT_NO_THROW(check_synthetic(t));
}

TEST(ValidateSynthetic, Errors) {
  SyntheticIdCounter ids;
  EXPECT_ERRC(validate_synthetic("<s>ibuprofen</s>", "aspirin", Outcome::kSuccess, {}, ids),
              Errc::kMissingIntervention);
  EXPECT_ERRC(validate_synthetic("aspirin report without tags", "aspirin", Outcome::kSuccess, {},
                                 ids),
              Errc::kNotReportShaped);
  EXPECT_ERRC(validate_synthetic("<a>aspirin</b>", "aspirin", Outcome::kSuccess, {}, ids),
              Errc::kNotReportShaped);
  EXPECT_ERRC(validate_synthetic(" \n", "aspirin", Outcome::kSuccess, {}, ids),
              Errc::kEmptyResponse);
  EXPECT_ERRC(validate_synthetic("<s>failure</s>", "aspirin", Outcome::kSuccess, {}, ids),
              Errc::kMissingIntervention);
}

TEST(CheckSynthetic, RejectsUnscrubbedText) {
  SyntheticTrial t;
  t.trial_id = "SYN-000001";
  t.intervention = "aspirin";
  t.text = "<s>aspirin was successful</s>";
  EXPECT_ERRC(check_synthetic(t), Errc::kNotReportShaped);
}

TEST(HasTagPair, Structural) {
  EXPECT_TRUE(has_tag_pair("<a>x</a>"));
  EXPECT_TRUE(has_tag_pair("<a attr=\"1\">x<b/></a>"));
  EXPECT_FALSE(has_tag_pair("<a>x"));
  EXPECT_FALSE(has_tag_pair("1 < 2 and 3 > 2"));
}

}  // namespace
}  // namespace trialsynth
