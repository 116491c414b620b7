#include <openssl/evp.h>

#include <json.hpp>

#include "dahl/core/records.hpp"
#include "dahl/llm/backend.hpp"

namespace dahl::llm {
namespace fs = std::filesystem;
namespace {

using Json = nlohmann::json;

std::string checksum(const std::string& text, FinishReason reason) {
  std::string payload = text;
  payload.push_back('\x1f');
  payload += to_string(reason);
  return sha256_hex(payload);
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

std::string cache_key(const std::string& model, const ChatRequest& req) {
  const Json canonical = Json::array({
      "dahl-cache-v1",
      req.backend_id,
      model,
      req.system_prompt ? Json(*req.system_prompt) : Json(nullptr),
      req.user_prompt,
      req.gen_config.temperature,
      req.gen_config.max_tokens,
      req.gen_config.seed ? Json(*req.gen_config.seed) : Json(nullptr),
  });
  return sha256_hex(canonical.dump(-1, ' ', false, Json::error_handler_t::replace));
}

CachedBackend::CachedBackend(BackendPtr inner, fs::path cache_dir)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)) {}

fs::path CachedBackend::entry_path(const ChatRequest& req) const {
  const auto key = cache_key(inner_->model(), req);
  return dir_ / key.substr(0, 2) / (key + ".json");
}

std::optional<ChatResponse> CachedBackend::lookup(const fs::path& path,
                                                  const std::string& key) const {
  std::error_code ec;
  if (!fs::exists(path, ec)) return std::nullopt;
  try {
    const auto j = Json::parse(read_file(path));
    if (j.at("key").get<std::string>() != key) return std::nullopt;
    ChatResponse out;
    out.text = j.at("text").get<std::string>();
    const auto reason = parse_finish_reason(j.at("finish_reason").get<std::string>());
    if (!reason) return std::nullopt;
    out.finish_reason = *reason;
    if (j.at("checksum").get<std::string>() != checksum(out.text, out.finish_reason)) {
      return std::nullopt;
    }
    out.from_cache = true;
    out.attempts = 0;
    return out;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

ChatResponse CachedBackend::complete(const ChatRequest& req) {
  const auto key = cache_key(inner_->model(), req);
  const auto path = dir_ / key.substr(0, 2) / (key + ".json");
  if (auto hit = lookup(path, key)) {
    ++hits_;
    return *hit;
  }
  ++misses_;
  auto resp = inner_->complete(req);
  const Json entry{{"key", key},
                   {"backend_id", req.backend_id},
                   {"model", inner_->model()},
                   {"text", resp.text},
                   {"finish_reason", std::string(to_string(resp.finish_reason))},
                   {"checksum", checksum(resp.text, resp.finish_reason)}};
  write_file_atomic(path, entry.dump(-1, ' ', false, Json::error_handler_t::replace));
  resp.from_cache = false;
  return resp;
}

}  // namespace dahl::llm
