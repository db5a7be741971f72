#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "harmrank/cache.hpp"
#include "harmrank/prompts.hpp"
#include "harmrank/random.hpp"
#include "harmrank/rate_limiter.hpp"
#include "harmrank/transport.hpp"

namespace harmrank::llm {

enum class EndpointKind { Chat, Moderation, Perspective };
std::string_view endpoint_name(EndpointKind kind);

struct ChatRequest {
  std::string model;
  prompts::MessageList messages;
  double temperature = 0.0;
  int max_tokens = 16;
};

// SHA-256 (lowercase hex) of a request's canonical serialization.
struct CacheKey {
  std::string digest;
  bool operator==(const CacheKey&) const = default;
};

std::string sha256_hex(std::string_view data);

// Compact JSON with fields in fixed order: endpoint, model, messages,
// temperature, max_tokens. `attempt` > 0 appends an attempt ordinal so that
// re-asks after an unparseable reply get their own cache slot.
std::string canonical_serialization(const ChatRequest& request, int attempt = 0);
CacheKey canonical_key(const ChatRequest& request, int attempt = 0);

// Key for the single-text scoring endpoints.
CacheKey scoring_key(EndpointKind kind, std::string_view model, std::string_view text);

struct RetryPolicy {
  int max_attempts = 3;  // total attempts, including the first
  std::chrono::milliseconds base_backoff{500};
  std::chrono::milliseconds max_backoff{20000};
};

// 429, 5xx and transport-level failures (status 0) are worth retrying.
bool is_retryable_status(int status);

using Sleeper = std::function<void(std::chrono::milliseconds)>;

struct ClientOptions {
  RetryPolicy retry;
  double requests_per_minute = 0.0;  // <= 0 disables rate limiting
  std::size_t max_in_flight = 8;
  std::uint64_t jitter_seed = 0x5EEDULL;
  Sleeper sleeper;  // defaults to std::this_thread::sleep_for
};

struct CallResult {
  std::string text;
  bool from_cache = false;
  int retries = 0;
};

struct ClientStats {
  std::uint64_t network_calls = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t retries = 0;
};

// Shared request machinery: cache lookup, rate limit, in-flight bound, and
// retry with exponential backoff plus jitter. Safe for concurrent use.
class ServiceClient {
 public:
  // `extract` maps a 2xx response to the text stored in the cache; it throws
  // on malformed bodies, which are reported as non-retryable transport errors.
  using Extractor = std::function<std::string(const HttpResponse&)>;

  ServiceClient(std::shared_ptr<Transport> transport, std::shared_ptr<ResponseCache> cache,
                ClientOptions options = {});

  CallResult call(const CacheKey& key, const HttpRequest& request, const Extractor& extract);

  ClientStats stats() const;
  std::size_t in_flight_high_water_mark() const { return in_flight_.high_water_mark(); }
  const std::shared_ptr<ResponseCache>& cache() const { return cache_; }

 private:
  std::chrono::milliseconds backoff(int retry_index);

  std::shared_ptr<Transport> transport_;
  std::shared_ptr<ResponseCache> cache_;
  ClientOptions options_;
  TokenBucket bucket_;
  InFlightLimiter in_flight_;
  std::mutex jitter_mutex_;
  Rng jitter_rng_;
  std::atomic<std::uint64_t> network_calls_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::atomic<std::uint64_t> retries_{0};
};

struct Endpoint {
  std::string base_url;
  std::string api_key;
};

inline constexpr const char* kDefaultChatBaseUrl = "https://api.openai.com/v1";
inline constexpr const char* kDefaultModerationBaseUrl = "https://api.openai.com/v1";
inline constexpr const char* kDefaultPerspectiveBaseUrl =
    "https://commentanalyzer.googleapis.com";
inline constexpr const char* kDefaultModerationModel = "omni-moderation-latest";

// Chat-completion client speaking the mainstream messages-in/text-out JSON
// protocol: POST {base_url}/chat/completions.
class ChatClient {
 public:
  ChatClient(std::shared_ptr<ServiceClient> service, Endpoint endpoint);

  // Throws TransportError when attempts are exhausted or the status is not
  // retryable.
  CallResult complete(const ChatRequest& request, int attempt = 0);

  static std::string request_body(const ChatRequest& request);
  static std::string reply_text(const std::string& response_body);

  ServiceClient& service() { return *service_; }

 private:
  std::shared_ptr<ServiceClient> service_;
  Endpoint endpoint_;
};

// POST {base_url}/moderations; returns the raw JSON response body.
class ModerationClient {
 public:
  ModerationClient(std::shared_ptr<ServiceClient> service, Endpoint endpoint,
                   std::string model = kDefaultModerationModel);
  CallResult classify(const std::string& text);
  ServiceClient& service() { return *service_; }

 private:
  std::shared_ptr<ServiceClient> service_;
  Endpoint endpoint_;
  std::string model_;
};

// POST {base_url}/v1alpha1/comments:analyze?key=...; requests the TOXICITY
// attribute and returns the raw JSON response body.
class PerspectiveClient {
 public:
  PerspectiveClient(std::shared_ptr<ServiceClient> service, Endpoint endpoint);
  CallResult analyze(const std::string& text);
  ServiceClient& service() { return *service_; }

 private:
  std::shared_ptr<ServiceClient> service_;
  Endpoint endpoint_;
};

}  // namespace harmrank::llm
