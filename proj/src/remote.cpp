#include "ideaflow/remote.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdlib>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "httplib.h"

namespace ideaflow {

// ---------------------------------------------------------------------------
// Config

void BackendConfig::validate() const {
  if (kind == BackendKind::kRemote) {
    if (base_url.empty()) throw ValidationError("remote backend requires base_url");
    if (model_name.empty()) throw ValidationError("remote backend requires model_name");
  }
  if (!(timeout_s > 0.0)) throw ValidationError("backend timeout must be > 0");
  if (max_retries < 1) throw ValidationError("backend max_retries must be >= 1");
  if (!(backoff_base_s >= 0.0)) throw ValidationError("backend backoff_base must be >= 0");
  if (!(temperature >= 0.0)) throw ValidationError("backend temperature must be >= 0");
  if (concurrency_limit < 1 || concurrency_limit > 1024)
    throw ValidationError("backend concurrency_limit must lie in [1, 1024]");
}

void to_json(nlohmann::json& j, const BackendConfig& c) {
  j = nlohmann::json{{"kind", c.kind == BackendKind::kMock ? "mock" : "remote"},
                     {"base_url", c.base_url},
                     {"model_name", c.model_name},
                     {"api_key_env", c.api_key_env},
                     {"timeout", c.timeout_s},
                     {"max_retries", c.max_retries},
                     {"backoff_base", c.backoff_base_s},
                     {"temperature", c.temperature},
                     {"chat_path", c.chat_path},
                     {"text_pointer", c.text_pointer},
                     {"embeddings_path", c.embeddings_path},
                     {"embedding_pointer", c.embedding_pointer},
                     {"concurrency_limit", c.concurrency_limit}};
}

void from_json(const nlohmann::json& j, BackendConfig& c) {
  static const std::set<std::string> known{
      "kind",        "base_url",         "model_name",      "api_key_env",       "timeout",
      "max_retries", "backoff_base",     "temperature",     "chat_path",         "text_pointer",
      "embeddings_path", "embedding_pointer", "concurrency_limit", "api_key"};
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw ValidationError("unknown backend config key '" + k + "'");
  }
  if (j.contains("api_key"))
    throw ValidationError("API keys are read from the environment; set api_key_env instead");
  if (j.contains("kind")) {
    const auto kind = j["kind"].get<std::string>();
    if (kind == "mock") c.kind = BackendKind::kMock;
    else if (kind == "remote") c.kind = BackendKind::kRemote;
    else throw ValidationError("backend kind must be 'mock' or 'remote'");
  }
  c.base_url = j.value("base_url", c.base_url);
  c.model_name = j.value("model_name", c.model_name);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout_s = j.value("timeout", c.timeout_s);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.backoff_base_s = j.value("backoff_base", c.backoff_base_s);
  c.temperature = j.value("temperature", c.temperature);
  c.chat_path = j.value("chat_path", c.chat_path);
  c.text_pointer = j.value("text_pointer", c.text_pointer);
  c.embeddings_path = j.value("embeddings_path", c.embeddings_path);
  c.embedding_pointer = j.value("embedding_pointer", c.embedding_pointer);
  c.concurrency_limit = j.value("concurrency_limit", c.concurrency_limit);
}

// ---------------------------------------------------------------------------
// Transport

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(const std::string& base_url) {
    static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(base_url, m, url_re))
      throw ValidationError("base_url must look like http(s)://host[:port][/prefix]: " + base_url);
    host_ = m[1].str();
    prefix_ = m[2].matched ? m[2].str() : "";
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  HttpResponse post(const std::string& path, const std::string& body, const HttpHeaders& headers,
                    std::chrono::milliseconds timeout) override {
    httplib::Client client(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Post(prefix_ + path, h, body, "application/json");
    HttpResponse out;
    if (!res) {
      out.error = httplib::to_string(res.error());
      return out;
    }
    out.status = res->status;
    out.body = res->body;
    return out;
  }

 private:
  std::string host_;
  std::string prefix_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(const std::string& base_url) {
  return std::make_shared<HttplibTransport>(base_url);
}

Sleeper real_sleeper() {
  return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

// ---------------------------------------------------------------------------
// Logging

BackendLog::BackendLog(const std::filesystem::path& path, std::string secret)
    : out_(path, std::ios::app), secret_(std::move(secret)) {
  if (!out_) throw ValidationError("cannot open backend log " + path.string());
}

std::string BackendLog::redact(std::string text) const {
  if (secret_.empty()) return text;
  std::size_t pos = 0;
  while ((pos = text.find(secret_, pos)) != std::string::npos) {
    text.replace(pos, secret_.size(), "[REDACTED]");
    pos += 10;
  }
  return text;
}

void BackendLog::record(std::string_view role, const nlohmann::json& request,
                        const HttpResponse& response) {
  nlohmann::json entry{{"role", role},
                       {"request", redact(request.dump())},
                       {"status", response.status},
                       {"response", redact(response.body)}};
  if (!response.error.empty()) entry["error"] = response.error;
  std::lock_guard lock(mutex_);
  out_ << entry.dump() << '\n';
  out_.flush();
}

// ---------------------------------------------------------------------------
// Client

ChatClient::ChatClient(BackendConfig config, std::shared_ptr<HttpTransport> transport,
                       std::string api_key, Sleeper sleep, std::shared_ptr<BackendLog> log)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      api_key_(std::move(api_key)),
      sleep_(std::move(sleep)),
      log_(std::move(log)),
      in_flight_(std::make_shared<std::counting_semaphore<1024>>(config_.concurrency_limit)) {
  config_.validate();
  if (!transport_) throw ValidationError("chat client needs a transport");
}

nlohmann::json ChatClient::post_json(std::string_view role, const std::string& path,
                                     const nlohmann::json& request) const {
  HttpHeaders headers{{"Content-Type", "application/json"}};
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);
  const auto timeout = std::chrono::milliseconds(static_cast<std::int64_t>(config_.timeout_s * 1000.0));

  in_flight_->acquire();
  HttpResponse resp;
  try {
    resp = transport_->post(path, request.dump(), headers, timeout);
  } catch (...) {
    in_flight_->release();
    throw;
  }
  in_flight_->release();
  if (log_) log_->record(role, request, resp);

  if (!resp.error.empty()) throw BackendError("transport error: " + resp.error);
  if (resp.status < 200 || resp.status >= 300)
    throw BackendError(fmt::format("HTTP status {}", resp.status), resp.body);
  auto j = nlohmann::json::parse(resp.body, nullptr, false);
  if (j.is_discarded()) throw BackendError("response is not JSON", resp.body);
  return j;
}

std::string ChatClient::complete(const std::string& prompt, double temperature,
                                 const std::function<void(const std::string&)>& validate,
                                 std::string_view role) const {
  const nlohmann::json request{
      {"model", config_.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", temperature}};
  const RetryPolicy policy{config_.max_retries,
                           std::chrono::milliseconds(static_cast<std::int64_t>(config_.backoff_base_s * 1000.0))};
  std::vector<AttemptRecord> attempts;
  auto record = [&] {
    std::lock_guard lock(attempts_mutex_);
    last_attempts_ = attempts;
  };
  try {
    auto text = call_with_retry(
        [&]() -> std::string {
          const auto j = post_json(role, config_.chat_path, request);
          const nlohmann::json::json_pointer ptr(config_.text_pointer);
          if (!j.contains(ptr) || !j.at(ptr).is_string())
            throw BackendError("no text at " + config_.text_pointer, j.dump());
          std::string t = j.at(ptr).get<std::string>();
          if (validate) validate(t);
          return t;
        },
        policy, sleep_, &attempts);
    record();
    return text;
  } catch (...) {
    record();
    throw;
  }
}

std::vector<double> ChatClient::embed(std::string_view text) const {
  const nlohmann::json request{{"model", config_.model_name}, {"input", std::string(text)}};
  const RetryPolicy policy{config_.max_retries,
                           std::chrono::milliseconds(static_cast<std::int64_t>(config_.backoff_base_s * 1000.0))};
  std::vector<AttemptRecord> attempts;
  auto result = call_with_retry(
      [&]() -> std::vector<double> {
        const auto j = post_json("embed", config_.embeddings_path, request);
        const nlohmann::json::json_pointer ptr(config_.embedding_pointer);
        if (!j.contains(ptr) || !j.at(ptr).is_array())
          throw BackendError("no embedding at " + config_.embedding_pointer, j.dump());
        std::vector<double> v;
        for (const auto& x : j.at(ptr)) {
          if (!x.is_number()) throw BackendError("non-numeric embedding entry", j.dump());
          v.push_back(x.get<double>());
        }
        return v;
      },
      policy, sleep_, &attempts);
  std::lock_guard lock(attempts_mutex_);
  last_attempts_ = attempts;
  return result;
}

std::vector<AttemptRecord> ChatClient::last_attempts() const {
  std::lock_guard lock(attempts_mutex_);
  return last_attempts_;
}

std::shared_ptr<ChatClient> make_chat_client(const BackendConfig& config,
                                             std::shared_ptr<BackendLog> log) {
  config.validate();
  std::string key;
  if (const char* v = std::getenv(config.api_key_env.c_str())) key = v;
  return std::make_shared<ChatClient>(config, make_http_transport(config.base_url), std::move(key),
                                      real_sleeper(), std::move(log));
}

// ---------------------------------------------------------------------------
// Prompts

namespace {

std::string technical_elements(DocRefs docs) {
  std::set<std::string> features;
  for (const PatentDoc* d : docs) features.insert(d->features.begin(), d->features.end());
  std::string out;
  for (const auto& f : features) out += "- " + f + "\n";
  return out.empty() ? "- (none)\n" : out;
}

std::string literature_block(DocRefs docs) {
  std::string out;
  for (const PatentDoc* d : docs) {
    out += "[" + d->id + "]";
    if (d->ipc_section) out += fmt::format(" (IPC section {})", *d->ipc_section);
    out += " " + d->abstract + "\n";
  }
  return out.empty() ? "(none)\n" : out;
}

std::string score_text(std::optional<double> s) {
  return s ? fmt::format("{:.3f}", *s) : std::string("unscored");
}

const char* kSectionSpec =
    "(A) Core Method Description: the idea in brief and the problem it targets.\n"
    "(B) Functional Principle: the governing principle, with one or two formulas if useful.\n"
    "(C) Concrete Workflow: how the idea operates step by step.\n"
    "(D) Potential Innovation Directions: three to five follow-up directions.\n"
    "(E) Experimental Design: setup, independent and dependent variables, metrics, baselines.\n";

}  // namespace

std::string initial_idea_prompt(const Query& query, DocRefs trajectory) {
  return fmt::format(
      "Act as a cross-domain research designer. Propose one concrete, testable scientific idea "
      "for the query below. Use the literature only as inspiration; do not summarize it.\n\n"
      "User Query:\n{}\n\n"
      "Extracted technical elements:\n{}\n"
      "Reference patent-based literature metadata:\n{}\n"
      "Write exactly these five sections:\n{}\n"
      "Return only sections (A) to (E).\n",
      query.text, technical_elements(trajectory), literature_block(trajectory), kSectionSpec);
}

std::string crossover_prompt(const Query& query, const ScoredIdea& a, const ScoredIdea& b,
                             DocRefs context) {
  return fmt::format(
      "Combine the two ideas below into a single stronger idea. Keep what each does best and "
      "use the literature to fill gaps.\n\n"
      "Research Topic:\n{}\n\n"
      "Isolation Island Literature Context:\n{}\n"
      "Scientific Idea A(score:{:.3f}):\n{}\n\n"
      "Scientific Idea B(score:{:.3f}):\n{}\n\n"
      "Answer with all five sections:\n{}",
      query.text, literature_block(context), a.fitness.fitness, a.idea.text(), b.fitness.fitness,
      b.idea.text(), kSectionSpec);
}

std::string mutation_prompt(const Query& query, const Idea& idea, std::optional<double> score,
                            DocRefs island) {
  return fmt::format(
      "Improve the idea below by borrowing mechanisms from the distant literature provided. "
      "Raise novelty without losing feasibility.\n\n"
      "Research Topic:\n{}\n\n"
      "Isolation Island Literature Context:\n{}\n"
      "Original Idea(score:{}):\n{}\n\n"
      "Answer with all five sections:\n{}",
      query.text, literature_block(island), score_text(score), idea.text(), kSectionSpec);
}

std::string novelty_prompt(const Idea& idea) {
  return fmt::format(
      "Rate the novelty of the scientific idea below on a 1-5 scale "
      "(1: closely repeats existing work, 3: some new insight, 5: opens an unexplored direction).\n"
      "Respond with valid JSON only.\n\n"
      "Idea content:\n{}\n\n"
      "Output Format:\n{{\"novelty_score\": <decimal number between 1 and 5>}}\n",
      idea.text());
}

std::string feasibility_prompt(const Idea& idea) {
  return fmt::format(
      "Rate the feasibility of the scientific idea below on a 1-5 scale, judging logic, "
      "consistency, and whether it can be built with current methods "
      "(1: impractical, 3: major obstacles, 5: executable with existing resources).\n"
      "Respond with valid JSON only.\n\n"
      "Idea content:\n{}\n\n"
      "Output Format:\n{{\"feasibility_score\": <decimal number between 1 and 5>}}\n",
      idea.text());
}

// ---------------------------------------------------------------------------
// Parsing

std::optional<double> extract_score(std::string_view text, std::string_view key) {
  for (std::size_t start = text.find('{'); start != std::string_view::npos;
       start = text.find('{', start + 1)) {
    // Find the matching close brace, skipping string contents.
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    std::size_t end = std::string_view::npos;
    for (std::size_t i = start; i < text.size(); ++i) {
      const char c = text[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        end = i;
        break;
      }
    }
    if (end == std::string_view::npos) continue;
    auto j = nlohmann::json::parse(text.substr(start, end - start + 1), nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    auto it = j.find(std::string(key));
    if (it == j.end()) continue;
    if (it->is_number()) return it->get<double>();
    if (it->is_string()) {
      const auto s = it->get<std::string>();
      char* parse_end = nullptr;
      const double v = std::strtod(s.c_str(), &parse_end);
      if (parse_end != s.c_str() && *parse_end == '\0') return v;
    }
  }
  return std::nullopt;
}

ParsedScore parse_score(std::string_view text, std::string_view key) {
  const auto v = extract_score(text, key);
  if (!v || !std::isfinite(*v))
    throw BackendError(fmt::format("no numeric '{}' in reward response", key), std::string(text));
  ParsedScore out;
  out.value = std::clamp(*v, 1.0, 5.0);
  if (out.value != *v) out.warning = fmt::format("{} {} clamped to {}", key, *v, out.value);
  return out;
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Drops heading decoration that follows a marker ("**", ":", the section title).
std::string section_body(std::string_view raw, std::string_view title) {
  std::string s = trim(raw);
  auto strip_decor = [&] {
    std::size_t i = 0;
    while (i < s.size() && (s[i] == '*' || s[i] == ':' || s[i] == ' ' || s[i] == '-' || s[i] == '#'))
      ++i;
    s.erase(0, i);
  };
  strip_decor();
  if (s.size() >= title.size()) {
    std::string head = s.substr(0, title.size());
    std::string t(title);
    std::transform(head.begin(), head.end(), head.begin(), ::tolower);
    std::transform(t.begin(), t.end(), t.begin(), ::tolower);
    if (head == t) {
      s.erase(0, title.size());
      strip_decor();
    }
  }
  // Markdown emphasis that opened the next marker.
  s = trim(s);
  while (!s.empty() && (s.back() == '*' || s.back() == '#')) s.pop_back();
  return trim(s);
}

}  // namespace

IdeaSections parse_idea_sections(std::string_view text) {
  if (trim(text).empty()) throw BackendError("empty idea text from generator", std::string(text));
  static constexpr std::array<std::string_view, 5> markers{"(A)", "(B)", "(C)", "(D)", "(E)"};
  static constexpr std::array<std::string_view, 5> titles{
      "Core Method Description", "Functional Principle", "Concrete Workflow",
      "Potential Innovation Directions", "Experimental Design"};
  std::array<std::size_t, 5> pos{};
  std::vector<std::string> missing;
  std::size_t from = 0;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    pos[i] = text.find(markers[i], from);
    if (pos[i] == std::string_view::npos) {
      missing.emplace_back(markers[i]);
    } else {
      from = pos[i] + markers[i].size();
    }
  }
  IdeaSections out;
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    out.method = trim(text);
    out.warnings.push_back("missing section markers " + list + "; whole text kept as method");
    return out;
  }
  std::array<std::string, 5> body;
  for (std::size_t i = 0; i < markers.size(); ++i) {
    const std::size_t begin = pos[i] + markers[i].size();
    const std::size_t end = i + 1 < markers.size() ? pos[i + 1] : text.size();
    body[i] = section_body(text.substr(begin, end - begin), titles[i]);
  }
  out.motivation = body[0];
  out.method = body[1] + "\n\n" + body[2];
  out.auxiliary = body[3];
  out.experimental_plan = body[4];
  return out;
}

// ---------------------------------------------------------------------------
// Remote roles

RemoteGenerator::RemoteGenerator(std::shared_ptr<const ChatClient> client)
    : client_(std::move(client)) {}

Idea RemoteGenerator::generate(const std::string& prompt) const {
  const auto text = client_->complete(
      prompt, client_->config().temperature,
      [](const std::string& t) { parse_idea_sections(t); }, "generator");
  auto sections = parse_idea_sections(text);
  Idea idea;
  idea.motivation = std::move(sections.motivation);
  idea.method = std::move(sections.method);
  idea.auxiliary = std::move(sections.auxiliary);
  idea.experimental_plan = std::move(sections.experimental_plan);
  idea.warnings = std::move(sections.warnings);
  return idea;
}

Idea RemoteGenerator::generate_initial(const Query& query, DocRefs trajectory) const {
  if (trajectory.empty()) throw ValidationError("cannot generate from an empty trajectory");
  return generate(initial_idea_prompt(query, trajectory));
}

Idea RemoteGenerator::crossover_idea(const Query& query, const ScoredIdea& a, const ScoredIdea& b,
                                     DocRefs context) const {
  return generate(crossover_prompt(query, a, b, context));
}

Idea RemoteGenerator::mutate_idea(const Query& query, const Idea& idea, std::optional<double> score,
                                  DocRefs island) const {
  if (island.empty()) {
    Idea same = idea;
    same.warnings.push_back("empty isolation island: idea passed through unchanged");
    return same;
  }
  return generate(mutation_prompt(query, idea, score, island));
}

RemoteRewardModel::RemoteRewardModel(std::shared_ptr<const ChatClient> client)
    : client_(std::move(client)) {}

RewardResponse RemoteRewardModel::score_idea(const Idea& idea) const {
  if (idea.motivation.empty() && idea.method.empty() && idea.experimental_plan.empty())
    throw ValidationError("cannot score idea '" + idea.id + "' without text");
  const double temp = client_->config().temperature;
  auto ask = [&](const std::string& prompt, std::string_view key) {
    const auto text = client_->complete(
        prompt, temp, [key](const std::string& t) { parse_score(t, key); }, "reward");
    return std::pair{text, parse_score(text, key)};
  };
  const auto [novelty_text, novelty] = ask(novelty_prompt(idea), "novelty_score");
  const auto [feasibility_text, feasibility] = ask(feasibility_prompt(idea), "feasibility_score");
  RewardResponse r;
  r.novelty_score = novelty.value;
  r.feasibility_score = feasibility.value;
  r.raw_text = novelty_text + "\n" + feasibility_text;
  if (novelty.warning) r.warnings.push_back(*novelty.warning);
  if (feasibility.warning) r.warnings.push_back(*feasibility.warning);
  return r;
}

RemoteEmbedder::RemoteEmbedder(std::shared_ptr<const ChatClient> client, std::size_t dim)
    : client_(std::move(client)), dim_(dim) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

std::vector<double> RemoteEmbedder::embed_text(std::string_view text) const {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  auto v = client_->embed(text);
  if (v.size() != dim_)
    throw BackendError(fmt::format("embedding has dimension {}, expected {}", v.size(), dim_));
  if (l2_norm(v) == 0.0) throw BackendError("embedding backend returned a zero vector");
  normalize_in_place(v);
  return v;
}

}  // namespace ideaflow
