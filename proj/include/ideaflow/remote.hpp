#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ideaflow/backends.hpp"
#include "ideaflow/errors.hpp"

namespace ideaflow {

enum class BackendKind { kMock, kRemote };

struct BackendConfig {
  BackendKind kind = BackendKind::kMock;
  std::string base_url;    // scheme://host[:port][/prefix]
  std::string model_name;
  std::string api_key_env = "IDEAFLOW_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 3;     // total attempts per request
  double backoff_base_s = 1.0;
  double temperature = 0.7;
  std::string chat_path = "/chat/completions";
  std::string text_pointer = "/choices/0/message/content";  // JSON pointer into the response
  std::string embeddings_path = "/embeddings";
  std::string embedding_pointer = "/data/0/embedding";
  int concurrency_limit = 4;
  std::string log_path;    // backend_log.jsonl; empty disables logging

  /// Throws ValidationError for out-of-range values or a remote config
  /// without base_url / model_name.
  void validate() const;
};

void to_json(nlohmann::json& j, const BackendConfig& c);
void from_json(const nlohmann::json& j, BackendConfig& c);

// ---------------------------------------------------------------------------
// Transport

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string error;  // non-empty on connection failure or timeout
};

class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const HttpHeaders& headers, std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib client bound to `base_url`; a path prefix in the URL is
/// prepended to every request path.
std::shared_ptr<HttpTransport> make_http_transport(const std::string& base_url);

// ---------------------------------------------------------------------------
// Retry

using Sleeper = std::function<void(std::chrono::milliseconds)>;

Sleeper real_sleeper();

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{1000};

  /// Delay after the failed attempt with 0-based index `attempt`.
  std::chrono::milliseconds delay_after(int attempt) const {
    return std::chrono::milliseconds(
        static_cast<std::int64_t>(std::ldexp(static_cast<double>(backoff_base.count()), attempt)));
  }
};

struct AttemptRecord {
  int attempt = 0;  // 1-based
  std::string error;
  std::chrono::milliseconds delay_before_next{0};
};

class RetryExhausted : public BackendError {
 public:
  RetryExhausted(const std::string& what, std::vector<AttemptRecord> attempts, std::string raw_text)
      : BackendError(what, std::move(raw_text)), attempts_(std::move(attempts)) {}
  const std::vector<AttemptRecord>& attempts() const noexcept { return attempts_; }

 private:
  std::vector<AttemptRecord> attempts_;
};

/// Runs `fn` up to policy.max_retries times. A BackendError thrown by `fn`
/// counts as a failed attempt; between attempts the sleeper is called with
/// backoff_base * 2^attempt. Anything else propagates immediately.
template <class F>
auto call_with_retry(F&& fn, const RetryPolicy& policy, const Sleeper& sleep,
                     std::vector<AttemptRecord>* log = nullptr) -> decltype(fn()) {
  if (policy.max_retries < 1) throw ValidationError("max_retries must be >= 1");
  std::vector<AttemptRecord> attempts;
  std::string last_raw;
  for (int i = 0; i < policy.max_retries; ++i) {
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        attempts.push_back({i + 1, {}, std::chrono::milliseconds(0)});
        if (log) *log = attempts;
        return;
      } else {
        auto result = fn();
        attempts.push_back({i + 1, {}, std::chrono::milliseconds(0)});
        if (log) *log = attempts;
        return result;
      }
    } catch (const BackendError& e) {
      last_raw = e.raw_text();
      const bool last = i + 1 == policy.max_retries;
      const auto delay = last ? std::chrono::milliseconds(0) : policy.delay_after(i);
      attempts.push_back({i + 1, e.what(), delay});
      if (!last) sleep(delay);
    }
  }
  if (log) *log = attempts;
  std::string msg = "request failed after " + std::to_string(policy.max_retries) + " attempt(s):";
  for (const auto& a : attempts) msg += "\n  attempt " + std::to_string(a.attempt) + ": " + a.error;
  throw RetryExhausted(msg, std::move(attempts), std::move(last_raw));
}

// ---------------------------------------------------------------------------
// Logging

/// Appends request/response pairs to a JSONL file. The API key value and the
/// Authorization header never reach the file.
class BackendLog {
 public:
  BackendLog(const std::filesystem::path& path, std::string secret);
  void record(std::string_view role, const nlohmann::json& request, const HttpResponse& response);

 private:
  std::string redact(std::string text) const;

  std::mutex mutex_;
  std::ofstream out_;
  std::string secret_;
};

// ---------------------------------------------------------------------------
// Chat-completion client

class ChatClient {
 public:
  /// `api_key` is normally read from the environment variable named in the
  /// config; see make_chat_client.
  ChatClient(BackendConfig config, std::shared_ptr<HttpTransport> transport, std::string api_key,
             Sleeper sleep = real_sleeper(), std::shared_ptr<BackendLog> log = nullptr);

  const BackendConfig& config() const noexcept { return config_; }

  /// Sends one user message. `validate` runs on the extracted text and may
  /// throw BackendError to have the attempt retried.
  std::string complete(const std::string& prompt, double temperature,
                       const std::function<void(const std::string&)>& validate = {},
                       std::string_view role = "chat") const;

  std::vector<double> embed(std::string_view text) const;

  /// Attempt log of the most recent completed call on this client.
  std::vector<AttemptRecord> last_attempts() const;

 private:
  nlohmann::json post_json(std::string_view role, const std::string& path,
                           const nlohmann::json& request) const;

  BackendConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::string api_key_;
  Sleeper sleep_;
  std::shared_ptr<BackendLog> log_;
  std::shared_ptr<std::counting_semaphore<1024>> in_flight_;
  mutable std::mutex attempts_mutex_;
  mutable std::vector<AttemptRecord> last_attempts_;
};

/// Reads the key from the configured environment variable and builds an
/// httplib-backed client.
std::shared_ptr<ChatClient> make_chat_client(const BackendConfig& config,
                                             std::shared_ptr<BackendLog> log = nullptr);

// ---------------------------------------------------------------------------
// Prompts and parsing

std::string initial_idea_prompt(const Query& query, DocRefs trajectory);
std::string crossover_prompt(const Query& query, const ScoredIdea& a, const ScoredIdea& b,
                             DocRefs context);
std::string mutation_prompt(const Query& query, const Idea& idea, std::optional<double> score,
                            DocRefs island);
std::string novelty_prompt(const Idea& idea);
std::string feasibility_prompt(const Idea& idea);

/// Value of `key` in the first well-formed JSON object in `text` that has
/// it, or nullopt. Accepts numbers and numeric strings.
std::optional<double> extract_score(std::string_view text, std::string_view key);

struct ParsedScore {
  double value = 1.0;
  std::optional<std::string> warning;  // set when the value was clamped into [1, 5]
};

/// extract_score + clamp. Throws BackendError (carrying the text) when no
/// score can be found.
ParsedScore parse_score(std::string_view text, std::string_view key);

struct IdeaSections {
  std::string motivation;         // (A)
  std::string method;             // (B) + (C)
  std::string auxiliary;          // (D)
  std::string experimental_plan;  // (E)
  std::vector<std::string> warnings;
};

/// Splits generator output on the "(A)".."(E)" markers. Without markers the
/// whole text becomes the method and a warning is recorded. Throws
/// BackendError for blank text.
IdeaSections parse_idea_sections(std::string_view text);

class RemoteGenerator final : public IdeaGenerator {
 public:
  explicit RemoteGenerator(std::shared_ptr<const ChatClient> client);
  Idea generate_initial(const Query& query, DocRefs trajectory) const override;
  Idea crossover_idea(const Query& query, const ScoredIdea& a, const ScoredIdea& b,
                      DocRefs context) const override;
  Idea mutate_idea(const Query& query, const Idea& idea, std::optional<double> score,
                   DocRefs island) const override;

 private:
  Idea generate(const std::string& prompt) const;
  std::shared_ptr<const ChatClient> client_;
};

/// One chat call per reward dimension.
class RemoteRewardModel final : public RewardModel {
 public:
  explicit RemoteRewardModel(std::shared_ptr<const ChatClient> client);
  RewardResponse score_idea(const Idea& idea) const override;

 private:
  std::shared_ptr<const ChatClient> client_;
};

class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::shared_ptr<const ChatClient> client, std::size_t dim);
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed_text(std::string_view text) const override;

 private:
  std::shared_ptr<const ChatClient> client_;
  std::size_t dim_;
};

}  // namespace ideaflow
