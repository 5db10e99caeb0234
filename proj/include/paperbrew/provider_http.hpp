#pragma once

#include <string>

#include <httplib.h>
#include <json.hpp>

#include "paperbrew/provider.hpp"

namespace paperbrew {

// Minimal chat-completions shim: POSTs the request as JSON and returns the
// first message content. Endpoint, model, and key come from configuration;
// nothing in the pipeline depends on this adapter being reachable.
class LiveProvider final : public Provider {
 public:
  LiveProvider(std::string endpoint, std::string model, std::string api_key)
      : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)) {}

  std::string id() const override { return "live:" + model_; }

  ProviderResponse complete(const ProviderRequest& request) override {
    auto scheme = endpoint_.find("://");
    size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = endpoint_.find('/', host_start);
    std::string host = slash == std::string::npos ? endpoint_ : endpoint_.substr(0, slash);
    std::string path = slash == std::string::npos ? "/" : endpoint_.substr(slash);

    json body;
    body["model"] = model_;
    std::string user = request.instruction + "\n\nTitle: " + request.title +
                       "\n\nAbstract: " + request.abstract;
    body["messages"] = json::array({json{{"role", "user"}, {"content", user}}});

    httplib::Client client(host);
    client.set_read_timeout(120, 0);
    httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
    auto start = std::chrono::steady_clock::now();
    auto res = client.Post(path, headers, body.dump(), "application/json");
    double latency = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    if (!res) throw ProviderError("provider transport failure: " + httplib::to_string(res.error()));
    if (res->status != 200)
      throw ProviderError("provider returned HTTP " + std::to_string(res->status));

    json doc = json::parse(res->body, nullptr, false);
    std::string raw = res->body;
    if (!doc.is_discarded() && doc.contains("choices") && doc["choices"].is_array() &&
        !doc["choices"].empty()) {
      const auto& msg = doc["choices"][0];
      if (msg.contains("message") && msg["message"].contains("content"))
        raw = msg["message"]["content"].get<std::string>();
    }
    return ProviderResponse{raw, id(), latency};
  }

 private:
  std::string endpoint_;
  std::string model_;
  std::string api_key_;
};

}  // namespace paperbrew
