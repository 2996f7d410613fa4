#include <cstdlib>
#include <deque>
#include <filesystem>
#include <thread>

#include "doctest.h"

#include "httplib.h"

#include "../support/test_support.hpp"
#include "ideaflow/pipeline.hpp"
#include "ideaflow/remote.hpp"

using namespace ideaflow;
using namespace testsupport;

namespace {

/// In-process transport replaying scripted responses.
class ScriptedTransport final : public HttpTransport {
 public:
  explicit ScriptedTransport(std::deque<HttpResponse> script) : script_(std::move(script)) {}
  HttpResponse post(const std::string& path, const std::string& body, const HttpHeaders& headers,
                    std::chrono::milliseconds) override {
    std::lock_guard lock(mutex_);
    paths.push_back(path);
    bodies.push_back(nlohmann::json::parse(body));
    last_headers = headers;
    if (script_.empty()) return {500, "exhausted", ""};
    auto r = script_.front();
    script_.pop_front();
    return r;
  }
  std::vector<std::string> paths;
  std::vector<nlohmann::json> bodies;
  HttpHeaders last_headers;

 private:
  std::mutex mutex_;
  std::deque<HttpResponse> script_;
};

HttpResponse chat(const std::string& text) {
  return {200, nlohmann::json{{"choices", {{{"message", {{"content", text}}}}}}}.dump(), ""};
}

BackendConfig remote_config() {
  BackendConfig c;
  c.kind = BackendKind::kRemote;
  c.base_url = "http://127.0.0.1:1";
  c.model_name = "test-model";
  c.backoff_base_s = 0.5;
  return c;
}

struct Recorder {
  std::vector<std::chrono::milliseconds> sleeps;
  Sleeper sleeper() {
    return [this](std::chrono::milliseconds d) { sleeps.push_back(d); };
  }
};

const char* kFullIdea =
    "(A) Core Method Description: Use acoustic sorting to grade battery powders.\n"
    "(B) Functional Principle: Radiation force scales with particle volume.\n"
    "(C) Concrete Workflow: Suspend, sort, dry.\n"
    "(D) Potential Innovation Directions: Inline monitoring.\n"
    "(E) Experimental Design: Compare yield against sieving.\n";

}  // namespace

TEST_CASE("score extraction") {
  CHECK(extract_score("{\"novelty_score\": 4.2}", "novelty_score") == 4.2);
  CHECK(extract_score("Sure! Here it is: {\"novelty_score\": 3} Hope that helps.", "novelty_score") == 3.0);
  CHECK(extract_score("{\"novelty_score\": \"2.5\"}", "novelty_score") == 2.5);
  CHECK(extract_score("{\"other\": 1} then {\"novelty_score\": 2}", "novelty_score") == 2.0);
  CHECK(extract_score("{\"novelty_score\": 4.2", "novelty_score") == std::nullopt);
  CHECK(extract_score("no json at all", "novelty_score") == std::nullopt);
  CHECK(extract_score("{\"novelty_score\": \"high\"}", "novelty_score") == std::nullopt);
  CHECK(extract_score("{\"note\": \"a } brace\", \"feasibility_score\": 5}", "feasibility_score") == 5.0);
  CHECK(extract_score("{\"outer\": {\"novelty_score\": 1.5}}", "novelty_score") == 1.5);
}

TEST_CASE("score parsing clamps and warns") {
  const auto ok = parse_score("{\"novelty_score\": 4.5}", "novelty_score");
  CHECK(ok.value == 4.5);
  CHECK(!ok.warning);
  const auto hi = parse_score("{\"novelty_score\": 7}", "novelty_score");
  CHECK(hi.value == 5.0);
  CHECK(hi.warning);
  const auto lo = parse_score("{\"novelty_score\": 0}", "novelty_score");
  CHECK(lo.value == 1.0);
  CHECK(lo.warning);
  try {
    parse_score("I refuse", "novelty_score");
    FAIL("expected BackendError");
  } catch (const BackendError& e) {
    CHECK(e.raw_text() == "I refuse");
  }
}

TEST_CASE("idea section parsing") {
  const auto s = parse_idea_sections(kFullIdea);
  CHECK(s.motivation == "Use acoustic sorting to grade battery powders.");
  CHECK(s.method == "Radiation force scales with particle volume.\n\nSuspend, sort, dry.");
  CHECK(s.auxiliary == "Inline monitoring.");
  CHECK(s.experimental_plan == "Compare yield against sieving.");
  CHECK(s.warnings.empty());

  const auto bold = parse_idea_sections("**(A) Core Method Description**: m\n**(B)** b\n(C) c\n(D) d\n(E) e");
  CHECK(bold.motivation == "m");
  CHECK(bold.method == "b\n\nc");

  const auto loose = parse_idea_sections("Just an idea without structure.");
  CHECK(loose.method == "Just an idea without structure.");
  CHECK(loose.motivation.empty());
  REQUIRE(loose.warnings.size() == 1);
  CHECK_THROWS_AS(parse_idea_sections("  \n "), BackendError);
}

TEST_CASE("prompts carry the required slots") {
  const Corpus c = load_corpus(data_path("fixture10.jsonl"));
  Query q{"safer batteries", {}};
  std::vector<const PatentDoc*> docs{&c.at("p01"), &c.at("p04")};
  const auto init = initial_idea_prompt(q, docs);
  CHECK(init.find("safer batteries") != std::string::npos);
  CHECK(init.find("Extracted technical elements") != std::string::npos);
  CHECK(init.find("thermal sensor") != std::string::npos);
  CHECK(init.find("[p04] (IPC section F)") != std::string::npos);
  for (const char* m : {"(A)", "(B)", "(C)", "(D)", "(E)"}) CHECK(init.find(m) != std::string::npos);

  ScoredIdea a, b;
  a.idea.method = "alpha";
  a.fitness = make_fitness(4, 4);
  b.idea.method = "beta";
  b.fitness = make_fitness(2, 3);
  const auto x = crossover_prompt(q, a, b, docs);
  CHECK(x.find("Isolation Island Literature Context") != std::string::npos);
  CHECK(x.find("Scientific Idea A(score:0.750)") != std::string::npos);
  CHECK(x.find("Scientific Idea B(score:0.375)") != std::string::npos);
  const auto m = mutation_prompt(q, a.idea, 0.5, docs);
  CHECK(m.find("Original Idea(score:0.500)") != std::string::npos);
  CHECK(novelty_prompt(a.idea).find("{\"novelty_score\":") != std::string::npos);
  CHECK(feasibility_prompt(a.idea).find("{\"feasibility_score\":") != std::string::npos);
}

TEST_CASE("retry policy doubles the delay and reports every attempt") {
  RetryPolicy p{4, std::chrono::milliseconds(250)};
  CHECK(p.delay_after(0).count() == 250);
  CHECK(p.delay_after(2).count() == 1000);
  Recorder rec;
  int calls = 0;
  std::vector<AttemptRecord> log;
  try {
    call_with_retry([&]() -> int { ++calls; throw BackendError("nope " + std::to_string(calls)); }, p,
                    rec.sleeper(), &log);
    FAIL("expected RetryExhausted");
  } catch (const RetryExhausted& e) {
    CHECK(e.attempts().size() == 4);
    CHECK(std::string(e.what()).find("nope 4") != std::string::npos);
  }
  CHECK(calls == 4);
  CHECK(rec.sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(250),
                                                             std::chrono::milliseconds(500),
                                                             std::chrono::milliseconds(1000)});
  // Validation errors are not retried.
  calls = 0;
  CHECK_THROWS_AS(call_with_retry([&]() -> int { ++calls; throw ValidationError("bad"); }, p, rec.sleeper()),
                  ValidationError);
  CHECK(calls == 1);
}

TEST_CASE("remote reward model: clean, wrapped, clamped, and malformed payloads") {
  Recorder rec;
  auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{
      chat("{\"novelty_score\": 4}"),
      chat("Here you go:\n```json\n{\"feasibility_score\": 3.5}\n```"),
      chat("{\"novelty_score\": 9}"),
      chat("{\"feasibility_score\": 2}"),
      chat("not a score"),
      chat("still nothing"),
      chat("{\"novelty_score\": oops}"),
  });
  auto client = std::make_shared<ChatClient>(remote_config(), transport, "sk-test", rec.sleeper());
  RemoteRewardModel rm(client);
  Idea idea;
  idea.id = "i";
  idea.method = "something";
  const auto r1 = rm.score_idea(idea);
  CHECK(r1.novelty_score == 4.0);
  CHECK(r1.feasibility_score == 3.5);
  CHECK(r1.warnings.empty());
  const auto r2 = rm.score_idea(idea);
  CHECK(r2.novelty_score == 5.0);
  CHECK(r2.warnings.size() == 1);
  CHECK_THROWS_AS(rm.score_idea(idea), RetryExhausted);
  CHECK(transport->bodies.size() == 7);
  CHECK(rec.sleeps == std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(500),
                                                             std::chrono::milliseconds(1000)});
  CHECK(transport->bodies[0]["model"] == "test-model");
  CHECK(transport->bodies[0]["temperature"] == 0.7);
  CHECK(transport->last_headers.back().second == "Bearer sk-test");
}

TEST_CASE("remote generator parses sections and retries HTTP errors") {
  Recorder rec;
  auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{
      {503, "busy", ""}, {0, "", "connection refused"}, chat(kFullIdea)});
  auto client = std::make_shared<ChatClient>(remote_config(), transport, "", rec.sleeper());
  RemoteGenerator gen(client);
  const Corpus c = load_corpus(data_path("fixture10.jsonl"));
  std::vector<const PatentDoc*> docs{&c.at("p01")};
  const Idea idea = gen.generate_initial(Query{"q", {}}, docs);
  CHECK(idea.motivation == "Use acoustic sorting to grade battery powders.");
  CHECK(client->last_attempts().size() == 3);
  CHECK(client->last_attempts()[0].error.find("503") != std::string::npos);
  CHECK(rec.sleeps.size() == 2);
  for (const auto& [k, v] : transport->last_headers) CHECK(k != "Authorization");
}

TEST_CASE("backend log redacts the key") {
  const auto dir = std::filesystem::temp_directory_path() / "ideaflow_log_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  auto log = std::make_shared<BackendLog>(dir / "log.jsonl", "sk-secret-123");
  auto transport = std::make_shared<ScriptedTransport>(std::deque<HttpResponse>{chat("echo sk-secret-123")});
  ChatClient client(remote_config(), transport, "sk-secret-123", [](auto) {}, log);
  client.complete("prompt mentioning sk-secret-123", 0.1);
  const auto text = read_file(dir / "log.jsonl");
  CHECK(text.find("sk-secret-123") == std::string::npos);
  CHECK(text.find("[REDACTED]") != std::string::npos);
}

TEST_CASE("backend config validation and json") {
  BackendConfig c = remote_config();
  CHECK_NOTHROW(c.validate());
  c.base_url.clear();
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = remote_config();
  c.max_retries = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  const nlohmann::json j = remote_config();
  CHECK(j.get<BackendConfig>().model_name == "test-model");
  CHECK_THROWS_AS((nlohmann::json{{"api_key", "x"}}.get<BackendConfig>()), ValidationError);
  CHECK_THROWS_AS((nlohmann::json{{"kind", "cloud"}}.get<BackendConfig>()), ValidationError);
  CHECK_THROWS_AS(make_http_transport("ftp://x"), ValidationError);
}

TEST_CASE("httplib transport against a local server with a path prefix") {
  httplib::Server server;
  std::vector<std::string> seen;
  std::mutex m;
  server.Post(R"(/v1/chat/completions)", [&](const httplib::Request& req, httplib::Response& res) {
    std::lock_guard lock(m);
    seen.push_back(req.get_header_value("Authorization"));
    res.set_content(chat("{\"novelty_score\": 2}").body, "application/json");
  });
  server.Post(R"(/v1/embeddings)", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"data":[{"embedding":[3,4]}]})", "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  BackendConfig cfg = remote_config();
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
  auto client = std::make_shared<ChatClient>(cfg, make_http_transport(cfg.base_url), "k1", [](auto) {});
  CHECK(parse_score(client->complete("x", 0.2), "novelty_score").value == 2.0);
  RemoteEmbedder emb(client, 2);
  const auto v = emb.embed_text("hello");
  CHECK(v[0] == doctest::Approx(0.6));
  RemoteEmbedder wrong(client, 3);
  CHECK_THROWS_AS(wrong.embed_text("hello"), BackendError);
  server.stop();
  t.join();
  REQUIRE(!seen.empty());
  CHECK(seen[0] == "Bearer k1");
}
