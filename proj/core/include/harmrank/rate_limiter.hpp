#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <mutex>

namespace harmrank::llm {

// Token bucket refilled at `requests_per_minute`. A non-positive rate
// disables limiting.
class TokenBucket {
 public:
  explicit TokenBucket(double requests_per_minute, double burst = 1.0);

  // Blocks until a token is available, then consumes it.
  void acquire();
  bool try_acquire();

 private:
  using Clock = std::chrono::steady_clock;
  void refill(Clock::time_point now);

  double rate_per_second_;
  double capacity_;
  double tokens_;
  Clock::time_point last_;
  std::mutex mutex_;
};

// Counting gate bounding the number of concurrent requests.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t max_in_flight);

  void acquire();
  void release();
  std::size_t high_water_mark() const;

  class Guard {
   public:
    explicit Guard(InFlightLimiter& limiter) : limiter_(limiter) { limiter_.acquire(); }
    ~Guard() { limiter_.release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    InFlightLimiter& limiter_;
  };

 private:
  std::size_t max_;
  std::size_t active_ = 0;
  std::size_t high_water_ = 0;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
};

}  // namespace harmrank::llm
