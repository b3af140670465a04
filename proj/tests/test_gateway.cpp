#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "nerif/error.hpp"
#include "nerif/gateway.hpp"
#include "nerif/response_parser.hpp"
#include "nerif/rng.hpp"
#include "testutil.hpp"

using namespace nerif;
using assess::ProficiencyLevel;
using testutil::TempDir;

namespace {

vlm::SessionRequest make_request(std::vector<std::string> case_ids = {"c1", "c2", "c3"},
                                 const std::string& request_id = "req-1") {
  vlm::SessionRequest request;
  request.prompt_text = "score the drawings";
  const auto png = encode_png(Raster::solid(4, 4, kWhite));
  request.attachments[0] = {prompt::AttachmentRole::ReferenceSheet, png};
  request.attachments[1] = {prompt::AttachmentRole::TestSheet, png};
  request.request_id = request_id;
  request.case_ids = std::move(case_ids);
  return request;
}

class FlakyBackend : public vlm::Backend {
 public:
  FlakyBackend(int failures, Errc code = Errc::TransportError)
      : failures_(failures), code_(code) {}
  std::string name() const override { return "flaky"; }
  vlm::SessionResponse invoke(const vlm::SessionRequest&) override {
    ++invocations;
    if (invocations <= failures_) raise(code_, "injected failure");
    vlm::SessionResponse r;
    r.text = "ok";
    return r;
  }
  int invocations = 0;

 private:
  int failures_;
  Errc code_;
};

struct FakeTime {
  std::int64_t now = 0;
  std::vector<int> sleeps;

  vlm::GatewayOptions options() {
    vlm::GatewayOptions o;
    o.now_ms = [this] { return now; };
    o.sleep_ms = [this](int ms) {
      sleeps.push_back(ms);
      now += ms;
    };
    return o;
  }
};

assess::Rubric small_rubric() {
  assess::Rubric rubric;
  rubric.components = {{'A', "first aspect"}, {'B', "second aspect"}, {'C', "third aspect"}};
  rubric.rule = {3, 3, 2};
  return rubric;
}

}  // namespace

TEST_CASE("gateway retries transient failures with exponential backoff") {
  auto backend = std::make_shared<FlakyBackend>(2);
  FakeTime time;
  auto options = time.options();
  options.requests_per_minute = 0;
  options.base_delay_ms = 100;
  vlm::Gateway gateway(backend, options);

  const auto response = gateway.submit(make_request());
  CHECK(response.text == "ok");
  CHECK(response.attempts == 3);
  CHECK(backend->invocations == 3);
  REQUIRE(time.sleeps.size() == 2);
  CHECK(time.sleeps[0] == 100);
  CHECK(time.sleeps[1] == 200);
}

TEST_CASE("non-transient failures are not retried") {
  auto backend = std::make_shared<FlakyBackend>(100, Errc::InvalidRequest);
  FakeTime time;
  auto options = time.options();
  options.requests_per_minute = 0;
  vlm::Gateway gateway(backend, options);
  CHECK_THROWS_AS(gateway.submit(make_request()), Error);
  CHECK(backend->invocations == 1);
  CHECK(time.sleeps.empty());
}

TEST_CASE("attempt cap and total-delay ceiling bound the retry loop") {
  SUBCASE("attempt cap") {
    auto backend = std::make_shared<FlakyBackend>(100);
    FakeTime time;
    auto options = time.options();
    options.requests_per_minute = 0;
    options.max_attempts = 4;
    options.base_delay_ms = 50;
    vlm::Gateway gateway(backend, options);
    try {
      gateway.submit(make_request());
      FAIL("expected TransportError");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::TransportError);
    }
    CHECK(backend->invocations == 4);
  }
  SUBCASE("delay ceiling") {
    auto backend = std::make_shared<FlakyBackend>(100);
    FakeTime time;
    auto options = time.options();
    options.requests_per_minute = 0;
    options.max_attempts = 50;
    options.base_delay_ms = 400;
    options.max_delay_ms = 400;
    options.total_delay_ceiling_ms = 1000;
    vlm::Gateway gateway(backend, options);
    CHECK_THROWS_AS(gateway.submit(make_request()), Error);
    std::int64_t total = 0;
    for (int s : time.sleeps) total += s;
    CHECK(total <= 1000);
    CHECK(backend->invocations < 50);
  }
}

TEST_CASE("rate limiter spaces dispatches to the configured rpm") {
  auto backend = std::make_shared<FlakyBackend>(0);
  FakeTime time;
  auto options = time.options();
  options.requests_per_minute = 60.0;  // 1000 ms between dispatches
  vlm::Gateway gateway(backend, options);

  gateway.submit(make_request({"a"}, "r1"));
  CHECK(time.sleeps.empty());  // first dispatch is immediate
  gateway.submit(make_request({"a"}, "r2"));
  gateway.submit(make_request({"a"}, "r3"));
  REQUIRE(time.sleeps.size() == 2);
  CHECK(time.sleeps[0] == 1000);
  CHECK(time.sleeps[1] == 1000);

  SUBCASE("scheduling deadline raises RateLimited") {
    auto strict = time.options();
    strict.requests_per_minute = 60.0;
    strict.schedule_deadline_ms = 300;
    vlm::Gateway tight(backend, strict);
    tight.submit(make_request({"a"}, "r4"));
    try {
      tight.submit(make_request({"a"}, "r5"));
      FAIL("expected RateLimited");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::RateLimited);
    }
  }
}

TEST_CASE("request invariants") {
  auto backend = std::make_shared<FlakyBackend>(0);
  vlm::GatewayOptions options;
  options.requests_per_minute = 0;
  vlm::Gateway gateway(backend, options);

  SUBCASE("empty attachment refused") {
    auto request = make_request();
    request.attachments[1].png.clear();
    CHECK_THROWS_AS(gateway.submit(request), Error);
  }
  SUBCASE("oversized attachment refused") {
    vlm::GatewayOptions tiny = options;
    tiny.max_attachment_bytes = 8;
    vlm::Gateway strict(backend, tiny);
    CHECK_THROWS_AS(strict.submit(make_request()), Error);
  }
  SUBCASE("empty prompt refused") {
    auto request = make_request();
    request.prompt_text.clear();
    CHECK_THROWS_AS(gateway.submit(request), Error);
  }
}

TEST_CASE("scripted backend replays fixtures verbatim and statelessly") {
  TempDir dir("scripted");
  const std::string canned = "Drawing 1: includes (A). The level is Beginning.\n";
  std::ofstream(dir / "req-1.txt") << canned;
  auto backend = std::make_shared<vlm::ScriptedBackend>(dir.path());

  const auto first = backend->invoke(make_request({"c1"}, "req-1"));
  const auto second = backend->invoke(make_request({"c1"}, "req-1"));
  CHECK(first.text == canned);
  CHECK(second.text == canned);
  CHECK(first.finish_state == vlm::FinishState::Complete);

  try {
    backend->invoke(make_request({"c1"}, "req-unknown"));
    FAIL("expected InvalidRequest");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::InvalidRequest);
  }
}

TEST_CASE("oracle backend with identity labels round-trips through the parser") {
  const auto rubric = small_rubric();
  vlm::OracleScript script;
  script.hidden_labels = {{"c1", ProficiencyLevel::Beginning},
                          {"c2", ProficiencyLevel::Developing},
                          {"c3", ProficiencyLevel::Proficient}};
  auto backend = std::make_shared<vlm::OracleBackend>(script, rubric);

  const auto response = backend->invoke(make_request());
  const auto again = backend->invoke(make_request());
  CHECK(response.text == again.text);  // stateless

  const auto parsed = parser::parse(response.text, 3, rubric);
  CHECK(parsed.issues.empty());
  REQUIRE(parsed.assessments.size() == 3);
  CHECK(*parsed.assessments[0].final_level == ProficiencyLevel::Beginning);
  CHECK(*parsed.assessments[1].final_level == ProficiencyLevel::Developing);
  CHECK(*parsed.assessments[2].final_level == ProficiencyLevel::Proficient);
}

TEST_CASE("oracle script validation") {
  vlm::OracleScript script;
  script.hidden_labels["c1"] = ProficiencyLevel::Beginning;
  script.noise_matrix = {{{0.5, 0.6, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  CHECK_THROWS_AS(vlm::validate_script(script), Error);

  SUBCASE("unknown case") {
    vlm::OracleScript ok;
    ok.hidden_labels["c1"] = ProficiencyLevel::Beginning;
    try {
      vlm::oracle_generate({"c1", "c-unknown"}, ok, small_rubric());
      FAIL("expected UnknownCase");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::UnknownCase);
    }
  }
}

TEST_CASE("noise matrix drives emitted level frequencies") {
  const auto rubric = small_rubric();
  vlm::OracleScript script;
  script.seed = 314159;
  script.noise_matrix = {{{0.5, 0.5, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  for (int i = 0; i < 10000; ++i)
    script.hidden_labels["case-" + std::to_string(i)] = ProficiencyLevel::Beginning;

  std::array<int, 3> emitted{};
  for (int i = 0; i < 10000; ++i) {
    const std::string case_id = "case-" + std::to_string(i);
    const auto text = vlm::oracle_generate({case_id}, script, rubric);
    const auto parsed = parser::parse(text, 1, rubric);
    REQUIRE(parsed.assessments.size() == 1);
    REQUIRE(parsed.assessments[0].final_level.has_value());
    ++emitted[assess::ordinal(*parsed.assessments[0].final_level)];
  }
  CHECK(std::abs(emitted[0] / 10000.0 - 0.5) <= 0.02);
  CHECK(std::abs(emitted[1] / 10000.0 - 0.5) <= 0.02);
  CHECK(emitted[2] == 0);
}

TEST_CASE("emitted verdict blocks always classify to the emitted level") {
  Rng rng(246);
  for (int trial = 0; trial < 200; ++trial) {
    const auto rubric = testutil::random_rubric(rng);
    std::vector<std::string> case_ids = {"a" + std::to_string(trial), "b" + std::to_string(trial)};
    auto script = testutil::random_script(rng, case_ids, rubric);
    script.noise_matrix = {{{0.2, 0.5, 0.3}, {0.3, 0.4, 0.3}, {0.1, 0.1, 0.8}}};

    const auto text = vlm::oracle_generate(case_ids, script, rubric);
    const auto parsed = parser::parse(text, 2, rubric);
    CHECK(parsed.issues.empty());  // RubricInconsistency would show up here
    for (const auto& assessment : parsed.assessments) {
      REQUIRE(assessment.final_level.has_value());
      CHECK(assess::classify(assessment.verdicts, rubric.rule) == *assessment.final_level);
    }
  }
}

TEST_CASE("remote backend speaks the chat-completions protocol") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::atomic<int> fail_first{0};
  std::string seen_auth;
  nlohmann::json seen_body;
  std::mutex seen_mutex;

  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    ++hits;
    {
      std::lock_guard lock(seen_mutex);
      seen_auth = req.get_header_value("Authorization");
      seen_body = nlohmann::json::parse(req.body, nullptr, false);
    }
    if (fail_first.load() > 0) {
      --fail_first;
      res.status = 500;
      res.set_content("boom", "text/plain");
      return;
    }
    const nlohmann::json reply = {
        {"choices",
         {{{"message", {{"role", "assistant"}, {"content", "Drawing 1: includes (A)."}}},
           {"finish_reason", "stop"}}}},
        {"usage", {{"prompt_tokens", 321}, {"completion_tokens", 55}}},
    };
    res.set_content(reply.dump(), "application/json");
  });

  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("NERIF_API_KEY", "sk-test-123", 1);
  vlm::RemoteOptions remote;
  remote.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  remote.model = "vision-scorer-1";

  vlm::GatewayOptions options;
  options.requests_per_minute = 0;
  options.base_delay_ms = 1;

  SUBCASE("happy path carries text, usage, and both attachments") {
    vlm::Gateway gateway(std::make_shared<vlm::RemoteBackend>(remote), options);
    const auto response = gateway.submit(make_request());
    CHECK(response.text == "Drawing 1: includes (A).");
    CHECK(response.finish_state == vlm::FinishState::Complete);
    CHECK(response.prompt_tokens == 321);
    CHECK(response.completion_tokens == 55);
    CHECK(response.attempts == 1);
    {
      std::lock_guard lock(seen_mutex);
      CHECK(seen_auth == "Bearer sk-test-123");
      REQUIRE(seen_body.is_object());
      CHECK(seen_body["model"] == "vision-scorer-1");
      CHECK(seen_body["temperature"].get<double>() == doctest::Approx(0.0));
      CHECK(seen_body["top_p"].get<double>() == doctest::Approx(0.01));
      const auto& content = seen_body["messages"][0]["content"];
      REQUIRE(content.size() == 3);  // text + 2 images
      CHECK(content[1]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,",
                                                                    0) == 0);
    }
  }
  SUBCASE("two transient 500s then success yields attempts = 3") {
    fail_first = 2;
    vlm::Gateway gateway(std::make_shared<vlm::RemoteBackend>(remote), options);
    const auto response = gateway.submit(make_request());
    CHECK(response.attempts == 3);
    CHECK(response.finish_state == vlm::FinishState::Complete);
  }
  SUBCASE("missing credential is a config error") {
    unsetenv("NERIF_API_KEY");
    vlm::Gateway gateway(std::make_shared<vlm::RemoteBackend>(remote), options);
    try {
      gateway.submit(make_request());
      FAIL("expected InvalidConfig");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::InvalidConfig);
    }
    setenv("NERIF_API_KEY", "sk-test-123", 1);
  }

  server.stop();
  server_thread.join();
}

TEST_CASE("remote backend surfaces truncation as a response, not an error") {
  httplib::Server server;
  server.Post("/api", [&](const httplib::Request&, httplib::Response& res) {
    const nlohmann::json reply = {
        {"choices",
         {{{"message", {{"content", "Drawing 1: includes"}}}, {"finish_reason", "length"}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("NERIF_API_KEY", "sk-test-123", 1);
  vlm::RemoteOptions remote;
  remote.endpoint_url = "http://127.0.0.1:" + std::to_string(port) + "/api";
  remote.model = "m";
  vlm::GatewayOptions options;
  options.requests_per_minute = 0;
  vlm::Gateway gateway(std::make_shared<vlm::RemoteBackend>(remote), options);

  const auto response = gateway.submit(make_request());
  CHECK(response.finish_state == vlm::FinishState::Truncated);
  CHECK(response.text == "Drawing 1: includes");

  server.stop();
  server_thread.join();
}
