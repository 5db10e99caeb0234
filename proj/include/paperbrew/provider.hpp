#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "paperbrew/util.hpp"

// Language-model provider seam. The pipeline only ever sees
// ProviderRequest -> ProviderResponse; which model (if any) sits behind it
// is a configuration concern. Shipped implementations: a deterministic
// mock, fixture replay, a scripted in-memory double, and a thin live HTTP
// adapter (provider_http.hpp).

namespace paperbrew {

struct SchemaField {
  std::string name;
  bool is_list = false;
  int min_items = 0;  // target arity for list fields
  int max_items = 0;
};

struct ResponseSchema {
  std::vector<SchemaField> fields;

  bool has_field(const std::string& name) const {
    return std::any_of(fields.begin(), fields.end(),
                       [&](const SchemaField& f) { return f.name == name; });
  }
};

struct ProviderRequest {
  std::string instruction;
  std::string title;
  std::string abstract;
  std::optional<std::string> pdf_bytes;
  ResponseSchema schema;
};

struct ProviderResponse {
  std::string raw;  // expected to contain one JSON object, possibly fenced
  std::string provider_id;
  double latency_ms = 0.0;
};

class ProviderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Provider {
 public:
  virtual ~Provider() = default;
  virtual ProviderResponse complete(const ProviderRequest& request) = 0;
  virtual std::string id() const = 0;
};

// The eight bilingual output fields of a structured summary, with topic
// and keyword arities pinned to their targets.
inline ResponseSchema summary_schema() {
  return ResponseSchema{{
      {"concise_summary", false, 0, 0},
      {"detailed_analysis", false, 0, 0},
      {"topics", true, 2, 3},
      {"keywords", true, 4, 6},
      {"concise_summary_zh", false, 0, 0},
      {"detailed_analysis_zh", false, 0, 0},
      {"topics_zh", true, 2, 3},
      {"keywords_zh", true, 4, 6},
  }};
}

namespace detail {

inline std::vector<std::string> alnum_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(c);
    } else if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(current);
  return tokens;
}

inline std::string title_case(std::string token) {
  if (token.empty()) return token;
  token = to_lower(token);
  token[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(token[0])));
  return token;
}

inline bool is_stopword(const std::string& lower) {
  static const std::set<std::string> words = {
      "the", "and", "for", "with", "that", "this", "from", "are", "our", "can",
      "via", "has", "have", "its", "their", "which", "into", "such", "these",
      "than", "then", "also", "both", "between", "over", "under", "more", "most",
      "not", "but", "all", "any", "each", "using", "use", "used", "based", "show",
      "shows", "propose", "proposed", "present", "paper", "method", "methods",
      "approach", "results", "model", "models", "new", "novel"};
  return words.count(lower) > 0;
}

}  // namespace detail

// Pure function of (title, abstract): topics are the first two title
// tokens longer than three characters (title-cased), keywords the four
// most frequent non-stopword abstract tokens with lexicographic
// tie-breaks, and every _zh field is its English counterpart behind a
// fixed marker. extracted_at is pinned so reruns are byte-identical.
class MockProvider final : public Provider {
 public:
  static constexpr const char* kZhMarker = "[zh] ";
  static constexpr const char* kExtractedAt = "1970-01-01T00:00:00Z";

  std::string id() const override { return "mock"; }

  ProviderResponse complete(const ProviderRequest& request) override {
    json out = request.schema.has_field("topics") ? summary_payload(request)
                                                  : generic_payload(request);
    return ProviderResponse{out.dump(), id(), 0.0};
  }

  static std::vector<std::string> mock_topics(const std::string& title) {
    std::vector<std::string> topics;
    for (const auto& token : detail::alnum_tokens(title)) {
      if (token.size() > 3) topics.push_back(detail::title_case(token));
      if (topics.size() == 2) break;
    }
    if (topics.empty()) topics.push_back("General");
    return topics;
  }

  static std::vector<std::string> mock_keywords(const std::string& abstract) {
    std::map<std::string, int> counts;
    for (const auto& token : detail::alnum_tokens(abstract)) {
      std::string lower = to_lower(token);
      if (lower.size() < 3 || detail::is_stopword(lower)) continue;
      ++counts[lower];
    }
    std::vector<std::pair<std::string, int>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    std::vector<std::string> keywords;
    for (const auto& [token, count] : ranked) {
      keywords.push_back(token);
      if (keywords.size() == 4) break;
    }
    if (keywords.empty()) keywords.push_back("general");
    return keywords;
  }

 private:
  static json summary_payload(const ProviderRequest& request) {
    auto topics = mock_topics(request.title);
    auto keywords = mock_keywords(request.abstract);
    std::string concise = first_sentences(request.abstract, 2);
    std::string detailed = "Pros: addresses " + to_lower(topics.front()) +
                           ". Cons: evaluation follows the abstract only.";
    json out;
    out["concise_summary"] = concise;
    out["detailed_analysis"] = detailed;
    out["topics"] = topics;
    out["keywords"] = keywords;
    out["concise_summary_zh"] = kZhMarker + concise;
    out["detailed_analysis_zh"] = kZhMarker + detailed;
    out["topics_zh"] = prefixed(topics);
    out["keywords_zh"] = prefixed(keywords);
    out["extracted_at"] = kExtractedAt;
    return out;
  }

  json generic_payload(const ProviderRequest& request) const {
    json out;
    for (const auto& field : request.schema.fields) {
      if (field.is_list)
        out[field.name] = json::array({"mock-" + field.name});
      else
        out[field.name] = "Mock " + field.name + " " +
                          fnv1a64_hex(request.instruction + "\n" + request.title).substr(0, 8);
    }
    return out;
  }

  static std::vector<std::string> prefixed(const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& item : items) out.push_back(kZhMarker + item);
    return out;
  }

  static std::string first_sentences(const std::string& text, int n) {
    int seen = 0;
    for (size_t i = 0; i < text.size(); ++i) {
      if (text[i] == '.' || text[i] == '!' || text[i] == '?') {
        if (++seen == n) return trim(text.substr(0, i + 1));
      }
    }
    return trim(text);
  }
};

// Replays recorded responses keyed by a stable digest of the request.
class ReplayProvider final : public Provider {
 public:
  explicit ReplayProvider(std::filesystem::path fixtures_dir) : dir_(std::move(fixtures_dir)) {}

  std::string id() const override { return "fixture"; }

  static std::string request_key(const ProviderRequest& request) {
    return fnv1a64_hex(request.instruction + "\n" + request.title + "\n" + request.abstract);
  }

  ProviderResponse complete(const ProviderRequest& request) override {
    std::filesystem::path path = dir_ / "provider" / (request_key(request) + ".json");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProviderError("no recorded response at " + path.string());
    std::string raw{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return ProviderResponse{raw, id(), 0.0};
  }

 private:
  std::filesystem::path dir_;
};

// In-memory double: hands out canned responses in order (repeating the
// last one) and records every request it saw. Callable from concurrent
// batch workers.
class ScriptedProvider final : public Provider {
 public:
  explicit ScriptedProvider(std::vector<std::string> responses)
      : responses_(std::move(responses)) {}

  std::string id() const override { return "scripted"; }

  ProviderResponse complete(const ProviderRequest& request) override {
    std::lock_guard<std::mutex> lock(mutex_);
    requests_.push_back(request);
    if (responses_.empty()) throw ProviderError("scripted provider has no responses");
    const std::string& raw =
        next_ < responses_.size() ? responses_[next_] : responses_.back();
    if (next_ < responses_.size()) ++next_;
    return ProviderResponse{raw, id(), 0.0};
  }

  size_t calls() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_.size();
  }
  std::vector<ProviderRequest> requests() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return requests_;
  }

 private:
  mutable std::mutex mutex_;
  std::vector<std::string> responses_;
  size_t next_ = 0;
  std::vector<ProviderRequest> requests_;
};

}  // namespace paperbrew
