#include <algorithm>
#include <thread>

#include "dahl/llm/backend.hpp"

namespace dahl::llm {

ConcurrencyGate::ConcurrencyGate(int limit) : limit_(limit) {
  if (limit_ < 1) throw ConfigError("max_concurrency must be >= 1");
}

void ConcurrencyGate::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [&] { return in_use_ < limit_; });
  ++in_use_;
}

void ConcurrencyGate::release() {
  {
    std::lock_guard lock(mutex_);
    --in_use_;
  }
  cv_.notify_one();
}

TokenBucket::TokenBucket(double rate_per_second, double burst)
    : rate_(rate_per_second), burst_(std::max(1.0, burst)), tokens_(burst_), last_(Clock::now()) {}

void TokenBucket::acquire() {
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mutex_);
      const auto now = Clock::now();
      tokens_ = std::min(burst_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
      last_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
    }
    std::this_thread::sleep_for(wait);
  }
}

ThrottledBackend::ThrottledBackend(BackendPtr inner, int max_concurrency,
                                   double requests_per_second)
    : inner_(std::move(inner)), gate_(max_concurrency) {
  if (requests_per_second > 0) {
    bucket_ = std::make_unique<TokenBucket>(requests_per_second, requests_per_second);
  }
}

ChatResponse ThrottledBackend::complete(const ChatRequest& req) {
  ConcurrencyGate::Permit permit(gate_);
  if (bucket_) bucket_->acquire();
  return inner_->complete(req);
}

}  // namespace dahl::llm
