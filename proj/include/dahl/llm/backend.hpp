#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "dahl/core/errors.hpp"
#include "dahl/core/types.hpp"

namespace dahl::llm {

struct ChatRequest {
  std::string backend_id;
  std::optional<std::string> system_prompt;
  std::string user_prompt;
  GenConfig gen_config;
};

struct ChatResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::Stop;
  std::int64_t latency_ms = 0;
  bool from_cache = false;
  int attempts = 1;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds max_backoff{30'000};
};

struct BackendSpec {
  std::string backend_id;
  std::string endpoint;  // full URL of the chat-completions route
  std::string model;
  std::string auth_env;  // name of the env var holding the bearer token; empty = no auth
  int max_concurrency = 4;
  double requests_per_second = 0.0;  // 0 disables the token bucket
  RetryPolicy retry;
  std::chrono::seconds timeout{60};
};

/// Empty when valid.
std::vector<std::string> validate(const BackendSpec& spec);

class BackendError : public Error {
 public:
  enum class Kind { Permanent, TransientExhausted };

  BackendError(Kind kind, const std::string& what, int attempts = 0)
      : Error(what), kind_(kind), attempts_(attempts) {}

  Kind kind() const noexcept { return kind_; }
  int attempts() const noexcept { return attempts_; }

 private:
  Kind kind_;
  int attempts_;
};

/// A chat-completion endpoint. Implementations must be safe to call from
/// several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  virtual ChatResponse complete(const ChatRequest& req) = 0;

  virtual const std::string& backend_id() const = 0;
  virtual const std::string& model() const = 0;
};

using BackendPtr = std::shared_ptr<ChatBackend>;

// ---------------------------------------------------------------------------
// HTTP

struct HttpReply {
  int status = 0;  // 0 = transport failure (connect error, timeout)
  std::string body;
  std::string transport_error;
};

/// Minimal POST abstraction so retry logic can be exercised without sockets.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpReply post(const std::string& url,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         const std::string& body, std::chrono::seconds timeout) = 0;
};

/// cpp-httplib based transport (http and https).
std::shared_ptr<HttpTransport> make_http_transport();

/// Request body: {model, messages:[{role, content}...], temperature, max_tokens[, seed]}.
std::string build_request_body(const std::string& model, const ChatRequest& req);

/// Extracts choices[0].message.content and choices[0].finish_reason.
/// Throws ParseError on a malformed body.
ChatResponse parse_response_body(const std::string& body);

/// 408, 429 and 5xx (and transport failures) are retried; other non-2xx are permanent.
bool is_transient_status(int status) noexcept;

/// Exponential backoff with jitter, retried up to the policy's attempt limit.
class HttpChatBackend final : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  HttpChatBackend(BackendSpec spec, std::shared_ptr<HttpTransport> transport,
                  Sleeper sleeper = {}, std::uint64_t jitter_seed = 0);

  ChatResponse complete(const ChatRequest& req) override;
  const std::string& backend_id() const override { return spec_.backend_id; }
  const std::string& model() const override { return spec_.model; }

  std::chrono::milliseconds backoff_for(int attempt);

 private:
  BackendSpec spec_;
  std::shared_ptr<HttpTransport> transport_;
  Sleeper sleeper_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
};

// ---------------------------------------------------------------------------
// Throttling

/// Counting gate bounding the number of in-flight calls.
class ConcurrencyGate {
 public:
  explicit ConcurrencyGate(int limit);

  class Permit {
   public:
    explicit Permit(ConcurrencyGate& gate) : gate_(&gate) { gate_->acquire(); }
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;
    ~Permit() { gate_->release(); }

   private:
    ConcurrencyGate* gate_;
  };

  int limit() const noexcept { return limit_; }

 private:
  void acquire();
  void release();

  int limit_;
  int in_use_ = 0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

/// Client-side token bucket; `acquire` blocks until a token is available.
class TokenBucket {
 public:
  using Clock = std::chrono::steady_clock;

  TokenBucket(double rate_per_second, double burst);
  void acquire();

 private:
  double rate_;
  double burst_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

/// Wraps a backend with a concurrency gate and an optional token bucket.
class ThrottledBackend final : public ChatBackend {
 public:
  ThrottledBackend(BackendPtr inner, int max_concurrency, double requests_per_second);

  ChatResponse complete(const ChatRequest& req) override;
  const std::string& backend_id() const override { return inner_->backend_id(); }
  const std::string& model() const override { return inner_->model(); }

 private:
  BackendPtr inner_;
  ConcurrencyGate gate_;
  std::unique_ptr<TokenBucket> bucket_;
};

// ---------------------------------------------------------------------------
// Cache

/// SHA-256 over a canonical encoding of (backend_id, model, system_prompt,
/// user_prompt, temperature, max_tokens, seed), as lowercase hex.
std::string cache_key(const std::string& model, const ChatRequest& req);

std::string sha256_hex(std::string_view data);

/// Content-addressed response cache: cache_dir/<first-2-hex>/<key>.json.
class CachedBackend final : public ChatBackend {
 public:
  CachedBackend(BackendPtr inner, std::filesystem::path cache_dir);

  ChatResponse complete(const ChatRequest& req) override;
  const std::string& backend_id() const override { return inner_->backend_id(); }
  const std::string& model() const override { return inner_->model(); }

  std::filesystem::path entry_path(const ChatRequest& req) const;

  std::size_t hits() const noexcept { return hits_; }
  std::size_t misses() const noexcept { return misses_; }

 private:
  std::optional<ChatResponse> lookup(const std::filesystem::path& path,
                                     const std::string& key) const;

  BackendPtr inner_;
  std::filesystem::path dir_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
};

// ---------------------------------------------------------------------------
// Mock

/// One scripted reply. The rule matches when the user prompt contains
/// `contains` (or matches `regex`); a rule with neither matches everything.
/// With several replies, the choice is a stable hash of (prompt, temperature,
/// seed), so the mock stays deterministic while varying across prompts.
/// A reply may use "{prompt}" to echo the user prompt.
struct MockRule {
  std::optional<std::string> contains;
  std::optional<std::string> regex;
  std::vector<std::string> replies;
  FinishReason finish_reason = FinishReason::Stop;
};

class MockBackend final : public ChatBackend {
 public:
  MockBackend(std::string backend_id, std::vector<MockRule> script,
              std::optional<std::string> default_reply = std::nullopt,
              std::string model = "mock");

  /// Echo backend: replies with the user prompt.
  static std::shared_ptr<MockBackend> echo(std::string backend_id);

  ChatResponse complete(const ChatRequest& req) override;
  const std::string& backend_id() const override { return id_; }
  const std::string& model() const override { return model_; }

  std::size_t calls() const noexcept { return calls_; }

 private:
  struct CompiledRule {
    MockRule rule;
    std::optional<std::regex> re;
  };

  std::string id_;
  std::string model_;
  std::vector<CompiledRule> script_;
  std::optional<std::string> default_reply_;
  std::atomic<std::size_t> calls_{0};
};

/// FNV-1a, 64 bit. Stable across platforms; used for mock reply selection.
std::uint64_t stable_hash(std::string_view data) noexcept;

}  // namespace dahl::llm
