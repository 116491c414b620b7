#include <charconv>

#include "dahl/llm/backend.hpp"

namespace dahl::llm {
namespace {

std::string replace_all(std::string s, std::string_view from, std::string_view to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::uint64_t stable_hash(std::string_view data) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

MockBackend::MockBackend(std::string backend_id, std::vector<MockRule> script,
                         std::optional<std::string> default_reply, std::string model)
    : id_(std::move(backend_id)), model_(std::move(model)), default_reply_(std::move(default_reply)) {
  for (auto& rule : script) {
    if (rule.replies.empty()) throw ConfigError("mock rule without replies in backend " + id_);
    CompiledRule compiled{std::move(rule), std::nullopt};
    if (compiled.rule.regex) {
      try {
        compiled.re.emplace(*compiled.rule.regex, std::regex::ECMAScript | std::regex::icase);
      } catch (const std::regex_error& e) {
        throw ConfigError("mock rule regex does not compile: " + *compiled.rule.regex);
      }
    }
    script_.push_back(std::move(compiled));
  }
}

std::shared_ptr<MockBackend> MockBackend::echo(std::string backend_id) {
  return std::make_shared<MockBackend>(std::move(backend_id), std::vector<MockRule>{},
                                       std::string("{prompt}"));
}

ChatResponse MockBackend::complete(const ChatRequest& req) {
  ++calls_;
  const auto& prompt = req.user_prompt;
  for (const auto& [rule, re] : script_) {
    bool hit = true;
    if (rule.contains) hit = prompt.find(*rule.contains) != std::string::npos;
    if (hit && re) hit = std::regex_search(prompt, *re);
    if (!hit) continue;

    std::size_t pick = 0;
    if (rule.replies.size() > 1) {
      std::string material = prompt;
      material.push_back('\x1f');
      material += format_double(req.gen_config.temperature);
      material.push_back('\x1f');
      if (req.gen_config.seed) material += std::to_string(*req.gen_config.seed);
      pick = stable_hash(material) % rule.replies.size();
    }
    ChatResponse out;
    out.text = replace_all(rule.replies[pick], "{prompt}", prompt);
    out.finish_reason = rule.finish_reason;
    return out;
  }
  if (default_reply_) {
    ChatResponse out;
    out.text = replace_all(*default_reply_, "{prompt}", prompt);
    return out;
  }
  throw BackendError(BackendError::Kind::Permanent,
                     "mock backend " + id_ + " has no rule for prompt: " + prompt);
}

}  // namespace dahl::llm
