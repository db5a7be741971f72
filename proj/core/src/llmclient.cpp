#include "harmrank/llmclient.hpp"

#include <algorithm>
#include <thread>

#include <openssl/evp.h>

#include "json.hpp"

#include "harmrank/errors.hpp"

namespace harmrank::llm {

using ordered_json = nlohmann::ordered_json;

std::string_view endpoint_name(EndpointKind kind) {
  switch (kind) {
    case EndpointKind::Chat:
      return "chat";
    case EndpointKind::Moderation:
      return "moderation";
    case EndpointKind::Perspective:
      return "perspective";
  }
  return "chat";
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

namespace {

ordered_json messages_json(const prompts::MessageList& messages) {
  auto out = ordered_json::array();
  for (const auto& m : messages) {
    ordered_json msg;
    msg["role"] = prompts::role_name(m.role);
    msg["content"] = m.content;
    out.push_back(std::move(msg));
  }
  return out;
}

void check_request(const ChatRequest& request) {
  prompts::check_message_list(request.messages);
  if (request.temperature < 0.0) throw ParameterError("temperature must be >= 0");
  if (request.max_tokens < 1) throw ParameterError("max_tokens must be >= 1");
}

std::string trim_slash(std::string url) {
  while (!url.empty() && url.back() == '/') url.pop_back();
  return url;
}

}  // namespace

std::string canonical_serialization(const ChatRequest& request, int attempt) {
  ordered_json j;
  j["endpoint"] = endpoint_name(EndpointKind::Chat);
  j["model"] = request.model;
  j["messages"] = messages_json(request.messages);
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  if (attempt > 0) j["attempt"] = attempt;
  return j.dump();
}

CacheKey canonical_key(const ChatRequest& request, int attempt) {
  return {sha256_hex(canonical_serialization(request, attempt))};
}

CacheKey scoring_key(EndpointKind kind, std::string_view model, std::string_view text) {
  ordered_json j;
  j["endpoint"] = endpoint_name(kind);
  j["model"] = model;
  j["input"] = text;
  return {sha256_hex(j.dump())};
}

bool is_retryable_status(int status) {
  return status == 0 || status == 429 || (status >= 500 && status <= 599);
}

ServiceClient::ServiceClient(std::shared_ptr<Transport> transport,
                             std::shared_ptr<ResponseCache> cache, ClientOptions options)
    : transport_(std::move(transport)),
      cache_(std::move(cache)),
      options_(std::move(options)),
      bucket_(options_.requests_per_minute),
      in_flight_(options_.max_in_flight),
      jitter_rng_(options_.jitter_seed) {
  if (!transport_) throw ParameterError("service client needs a transport");
  if (options_.retry.max_attempts < 1) throw ParameterError("max_attempts must be >= 1");
  if (!options_.sleeper) {
    options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::chrono::milliseconds ServiceClient::backoff(int retry_index) {
  const auto base = options_.retry.base_backoff.count();
  const auto cap = options_.retry.max_backoff.count();
  const auto exp = std::min<long long>(cap, base << std::min(retry_index, 20));
  double u;
  {
    std::lock_guard lock(jitter_mutex_);
    u = uniform01(jitter_rng_);
  }
  // Half fixed, half jitter.
  return std::chrono::milliseconds(exp / 2 + static_cast<long long>(u * (exp - exp / 2)));
}

CallResult ServiceClient::call(const CacheKey& key, const HttpRequest& request,
                               const Extractor& extract) {
  if (cache_) {
    if (auto hit = cache_->get(key.digest)) {
      ++cache_hits_;
      return {std::move(*hit), true, 0};
    }
  }

  CallResult result;
  for (int attempt = 1;; ++attempt) {
    int status = 0;
    std::string failure;
    try {
      bucket_.acquire();
      InFlightLimiter::Guard guard(in_flight_);
      ++network_calls_;
      const auto response = transport_->post(request);
      status = response.status;
      if (status >= 200 && status < 300) {
        try {
          result.text = extract(response);
        } catch (const std::exception& e) {
          throw TransportError(std::string("malformed response body: ") + e.what(), status);
        }
        break;
      }
      failure = "HTTP " + std::to_string(status) + ": " + response.body.substr(0, 200);
    } catch (const TransportError& e) {
      if (e.status() != 0) throw;
      failure = e.what();
    }
    if (!is_retryable_status(status)) throw TransportError(failure, status);
    if (attempt >= options_.retry.max_attempts) {
      throw TransportError("giving up after " + std::to_string(attempt) +
                               " attempts: " + failure,
                           status);
    }
    ++result.retries;
    ++retries_;
    options_.sleeper(backoff(attempt - 1));
  }

  if (cache_) cache_->put(key.digest, result.text);
  return result;
}

ClientStats ServiceClient::stats() const {
  return {network_calls_.load(), cache_hits_.load(), retries_.load()};
}

ChatClient::ChatClient(std::shared_ptr<ServiceClient> service, Endpoint endpoint)
    : service_(std::move(service)), endpoint_(std::move(endpoint)) {
  endpoint_.base_url = trim_slash(endpoint_.base_url);
}

std::string ChatClient::request_body(const ChatRequest& request) {
  ordered_json j;
  j["model"] = request.model;
  j["messages"] = messages_json(request.messages);
  j["temperature"] = request.temperature;
  j["max_tokens"] = request.max_tokens;
  return j.dump();
}

std::string ChatClient::reply_text(const std::string& response_body) {
  const auto j = nlohmann::json::parse(response_body);
  const auto& content = j.at("choices").at(0).at("message").at("content");
  return content.is_null() ? std::string() : content.get<std::string>();
}

CallResult ChatClient::complete(const ChatRequest& request, int attempt) {
  check_request(request);
  HttpRequest http;
  http.url = endpoint_.base_url + "/chat/completions";
  http.headers["Content-Type"] = "application/json";
  if (!endpoint_.api_key.empty()) http.headers["Authorization"] = "Bearer " + endpoint_.api_key;
  http.body = request_body(request);
  return service_->call(canonical_key(request, attempt), http,
                        [](const HttpResponse& r) { return reply_text(r.body); });
}

ModerationClient::ModerationClient(std::shared_ptr<ServiceClient> service, Endpoint endpoint,
                                   std::string model)
    : service_(std::move(service)), endpoint_(std::move(endpoint)), model_(std::move(model)) {
  endpoint_.base_url = trim_slash(endpoint_.base_url);
}

CallResult ModerationClient::classify(const std::string& text) {
  ordered_json body;
  body["model"] = model_;
  body["input"] = text;
  HttpRequest http;
  http.url = endpoint_.base_url + "/moderations";
  http.headers["Content-Type"] = "application/json";
  if (!endpoint_.api_key.empty()) http.headers["Authorization"] = "Bearer " + endpoint_.api_key;
  http.body = body.dump();
  return service_->call(scoring_key(EndpointKind::Moderation, model_, text), http,
                        [](const HttpResponse& r) {
                          if (!nlohmann::json::accept(r.body)) {
                            throw std::runtime_error("response body is not JSON");
                          }
                          return r.body;
                        });
}

PerspectiveClient::PerspectiveClient(std::shared_ptr<ServiceClient> service, Endpoint endpoint)
    : service_(std::move(service)), endpoint_(std::move(endpoint)) {
  endpoint_.base_url = trim_slash(endpoint_.base_url);
}

CallResult PerspectiveClient::analyze(const std::string& text) {
  ordered_json body;
  body["comment"] = {{"text", text}};
  body["languages"] = {"en"};
  body["requestedAttributes"] = {{"TOXICITY", ordered_json::object()}};
  HttpRequest http;
  http.url = endpoint_.base_url + "/v1alpha1/comments:analyze";
  if (!endpoint_.api_key.empty()) http.url += "?key=" + endpoint_.api_key;
  http.headers["Content-Type"] = "application/json";
  http.body = body.dump();
  return service_->call(scoring_key(EndpointKind::Perspective, "TOXICITY", text), http,
                        [](const HttpResponse& r) {
                          if (!nlohmann::json::accept(r.body)) {
                            throw std::runtime_error("response body is not JSON");
                          }
                          return r.body;
                        });
}

}  // namespace harmrank::llm
