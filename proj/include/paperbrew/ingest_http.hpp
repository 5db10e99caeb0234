#pragma once

#include <chrono>
#include <mutex>
#include <string>
#include <thread>

#include <httplib.h>

#include "paperbrew/ingest.hpp"

namespace paperbrew {

// Global request pacing shared by every live fetcher in the process.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_second = 2.0)
      : min_gap_(std::chrono::duration<double>(1.0 / requests_per_second)) {}

  void acquire() {
    std::unique_lock<std::mutex> lock(mutex_);
    auto now = std::chrono::steady_clock::now();
    auto earliest = last_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(min_gap_);
    if (now < earliest) {
      lock.unlock();
      std::this_thread::sleep_until(earliest);
      lock.lock();
    }
    last_ = std::chrono::steady_clock::now();
  }

 private:
  std::mutex mutex_;
  std::chrono::duration<double> min_gap_;
  std::chrono::steady_clock::time_point last_{};
};

// GET <endpoint>?date=YYYY-MM-DD. 404 means no curated papers that day.
class HttpFeedSource final : public FeedSource {
 public:
  HttpFeedSource(std::string endpoint, std::string auth_token = {},
                 std::shared_ptr<RateLimiter> limiter = nullptr)
      : endpoint_(std::move(endpoint)),
        token_(std::move(auth_token)),
        limiter_(limiter ? std::move(limiter) : std::make_shared<RateLimiter>()) {}

  std::optional<std::string> fetch(const std::string& date) override {
    limiter_->acquire();
    auto [host, path] = split_url(endpoint_);
    httplib::Client client(host);
    client.set_follow_location(true);
    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    std::string full = path + (path.find('?') == std::string::npos ? "?" : "&") + "date=" + date;
    auto res = client.Get(full, headers);
    if (!res) throw FeedError("transport failure: " + httplib::to_string(res.error()));
    if (res->status == 404) return std::nullopt;
    if (res->status != 200)
      throw FeedError("feed returned HTTP " + std::to_string(res->status));
    return res->body;
  }

 private:
  static std::pair<std::string, std::string> split_url(const std::string& url) {
    auto scheme = url.find("://");
    size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    auto slash = url.find('/', host_start);
    if (slash == std::string::npos) return {url, "/"};
    return {url.substr(0, slash), url.substr(slash)};
  }

  std::string endpoint_;
  std::string token_;
  std::shared_ptr<RateLimiter> limiter_;
};

}  // namespace paperbrew
