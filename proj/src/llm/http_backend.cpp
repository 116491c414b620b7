#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <thread>

#include <json.hpp>

#include "dahl/llm/backend.hpp"

namespace dahl::llm {
namespace {

using Json = nlohmann::json;

class HttplibTransport final : public HttpTransport {
 public:
  HttpReply post(const std::string& url,
                 const std::vector<std::pair<std::string, std::string>>& headers,
                 const std::string& body, std::chrono::seconds timeout) override {
    const auto scheme_end = url.find("://");
    const auto path_start =
        url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    const std::string origin = path_start == std::string::npos ? url : url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);
    auto res = client.Post(path, hdrs, body, "application/json");
    if (!res) return HttpReply{0, {}, httplib::to_string(res.error())};
    return HttpReply{res->status, res->body, {}};
  }
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport() {
  return std::make_shared<HttplibTransport>();
}

std::vector<std::string> validate(const BackendSpec& spec) {
  std::vector<std::string> v;
  if (spec.backend_id.empty()) v.emplace_back("backend_id must be non-empty");
  if (spec.max_concurrency < 1) v.emplace_back("max_concurrency must be >= 1");
  if (spec.retry.max_attempts < 1) v.emplace_back("retry.max_attempts must be >= 1");
  if (spec.requests_per_second < 0) v.emplace_back("requests_per_second must be >= 0");
  return v;
}

std::string build_request_body(const std::string& model, const ChatRequest& req) {
  Json messages = Json::array();
  if (req.system_prompt) messages.push_back({{"role", "system"}, {"content", *req.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", req.user_prompt}});
  Json body{{"model", model},
            {"messages", messages},
            {"temperature", req.gen_config.temperature},
            {"max_tokens", req.gen_config.max_tokens}};
  if (req.gen_config.seed) body["seed"] = *req.gen_config.seed;
  return body.dump(-1, ' ', false, Json::error_handler_t::replace);
}

ChatResponse parse_response_body(const std::string& body) {
  ChatResponse out;
  try {
    const auto j = Json::parse(body);
    const auto& choice = j.at("choices").at(0);
    const auto& content = choice.at("message").at("content");
    out.text = content.is_null() ? std::string{} : content.get<std::string>();
    const auto reason = choice.value("finish_reason", std::string("stop"));
    if (reason == "stop") {
      out.finish_reason = FinishReason::Stop;
    } else if (reason == "length") {
      out.finish_reason = FinishReason::Length;
    } else {
      out.finish_reason = FinishReason::Other;
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed chat-completion response: ") + e.what(), body);
  }
  return out;
}

bool is_transient_status(int status) noexcept {
  return status == 0 || status == 408 || status == 429 || (status >= 500 && status <= 599);
}

HttpChatBackend::HttpChatBackend(BackendSpec spec, std::shared_ptr<HttpTransport> transport,
                                 Sleeper sleeper, std::uint64_t jitter_seed)
    : spec_(std::move(spec)),
      transport_(std::move(transport)),
      sleeper_(std::move(sleeper)),
      rng_(jitter_seed) {
  if (auto v = validate(spec_); !v.empty()) throw ConfigError("backend " + spec_.backend_id + ": " + v.front());
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
}

std::chrono::milliseconds HttpChatBackend::backoff_for(int attempt) {
  const auto base = spec_.retry.base_backoff.count();
  const auto cap = spec_.retry.max_backoff.count();
  long long delay = base;
  for (int i = 1; i < attempt && delay < cap; ++i) delay *= 2;
  if (delay > cap) delay = cap;
  std::uniform_real_distribution<double> jitter(0.5, 1.0);
  double factor;
  {
    std::lock_guard lock(rng_mutex_);
    factor = jitter(rng_);
  }
  return std::chrono::milliseconds(static_cast<long long>(static_cast<double>(delay) * factor));
}

ChatResponse HttpChatBackend::complete(const ChatRequest& req) {
  if (req.user_prompt.empty()) throw PreconditionError("user_prompt must be non-empty");

  std::vector<std::pair<std::string, std::string>> headers;
  if (!spec_.auth_env.empty()) {
    const char* token = std::getenv(spec_.auth_env.c_str());
    if (token == nullptr || *token == '\0') {
      throw BackendError(BackendError::Kind::Permanent,
                         "missing credential: environment variable " + spec_.auth_env + " is unset");
    }
    headers.emplace_back("Authorization", std::string("Bearer ") + token);
  }
  const auto body = build_request_body(spec_.model, req);

  std::string last_error;
  for (int attempt = 1; attempt <= spec_.retry.max_attempts; ++attempt) {
    const auto start = std::chrono::steady_clock::now();
    const auto reply = transport_->post(spec_.endpoint, headers, body, spec_.timeout);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - start);

    if (reply.status >= 200 && reply.status < 300) {
      ChatResponse out;
      try {
        out = parse_response_body(reply.body);
      } catch (const ParseError& e) {
        throw BackendError(BackendError::Kind::Permanent, e.what(), attempt);
      }
      out.latency_ms = elapsed.count();
      out.attempts = attempt;
      return out;
    }
    last_error = reply.status == 0 ? "transport error: " + reply.transport_error
                                   : "HTTP " + std::to_string(reply.status);
    if (!is_transient_status(reply.status)) {
      throw BackendError(BackendError::Kind::Permanent,
                         spec_.backend_id + ": " + last_error, attempt);
    }
    if (attempt < spec_.retry.max_attempts) sleeper_(backoff_for(attempt));
  }
  throw BackendError(BackendError::Kind::TransientExhausted,
                     spec_.backend_id + ": retries exhausted after " +
                         std::to_string(spec_.retry.max_attempts) + " attempts (" + last_error + ")",
                     spec_.retry.max_attempts);
}

}  // namespace dahl::llm
