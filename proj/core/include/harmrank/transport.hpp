#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <string>

namespace harmrank::llm {

struct HttpRequest {
  std::string url;  // absolute, e.g. https://api.example.com/v1/chat/completions
  std::map<std::string, std::string> headers;
  std::string body;  // always POSTed as JSON
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

// Blocking HTTP POST. Implementations must be safe for concurrent use.
// Connection failures and timeouts throw TransportError with status 0.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual HttpResponse post(const HttpRequest& request) = 0;
};

std::shared_ptr<Transport> make_http_transport(
    std::chrono::seconds timeout = std::chrono::seconds(60));

}  // namespace harmrank::llm
