#include "harmrank/rate_limiter.hpp"

#include <algorithm>
#include <thread>

#include "harmrank/errors.hpp"

namespace harmrank::llm {

TokenBucket::TokenBucket(double requests_per_minute, double burst)
    : rate_per_second_(requests_per_minute / 60.0),
      capacity_(std::max(1.0, burst)),
      tokens_(capacity_),
      last_(Clock::now()) {}

void TokenBucket::refill(Clock::time_point now) {
  const std::chrono::duration<double> elapsed = now - last_;
  tokens_ = std::min(capacity_, tokens_ + elapsed.count() * rate_per_second_);
  last_ = now;
}

bool TokenBucket::try_acquire() {
  if (rate_per_second_ <= 0.0) return true;
  std::lock_guard lock(mutex_);
  refill(Clock::now());
  if (tokens_ >= 1.0) {
    tokens_ -= 1.0;
    return true;
  }
  return false;
}

void TokenBucket::acquire() {
  if (rate_per_second_ <= 0.0) return;
  for (;;) {
    std::chrono::duration<double> wait{};
    {
      std::lock_guard lock(mutex_);
      refill(Clock::now());
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      wait = std::chrono::duration<double>((1.0 - tokens_) / rate_per_second_);
    }
    std::this_thread::sleep_for(wait);
  }
}

InFlightLimiter::InFlightLimiter(std::size_t max_in_flight) : max_(max_in_flight) {
  if (max_ == 0) throw ParameterError("max_in_flight must be at least 1");
}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return active_ < max_; });
  ++active_;
  high_water_ = std::max(high_water_, active_);
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

std::size_t InFlightLimiter::high_water_mark() const {
  std::lock_guard lock(mutex_);
  return high_water_;
}

}  // namespace harmrank::llm
