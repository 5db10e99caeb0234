#pragma once

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "paperbrew/datamodel.hpp"
#include "paperbrew/dates.hpp"
#include "paperbrew/util.hpp"

// Trending-feed ingestion: fetch a day's entries, normalize them into
// PaperRecords, deduplicate across a month. The feed is consumed either
// from recorded fixture files or over HTTP (see ingest_http.hpp), both
// behind the same FeedSource interface.

namespace paperbrew {

struct FeedEntry {
  std::string id;
  std::string title;
  std::vector<std::string> authors;
  std::string abstract;
  std::optional<int> upvotes;
  std::string published_at;  // filled with the requested date when absent
  std::optional<std::string> pdf_ref;
};

class FeedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raw day's payload, or nothing when the feed has no data for the date.
// Transport problems throw; fetch_daily owns the retry policy.
class FeedSource {
 public:
  virtual ~FeedSource() = default;
  virtual std::optional<std::string> fetch(const std::string& date) = 0;
};

class FixtureFeedSource final : public FeedSource {
 public:
  explicit FixtureFeedSource(std::filesystem::path fixtures_dir)
      : dir_(std::move(fixtures_dir)) {}

  std::optional<std::string> fetch(const std::string& date) override {
    std::filesystem::path path = dir_ / "feed" / (date + ".json");
    if (!std::filesystem::exists(path)) return std::nullopt;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FeedError("cannot read fixture: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

 private:
  std::filesystem::path dir_;
};

// Tolerant field extraction: entries may carry the fields at top level or
// under a "paper" object, authors as strings or {"name": ...} objects.
inline std::optional<FeedEntry> parse_feed_entry(const json& node, WarningLog& warnings) {
  const json& p = node.contains("paper") && node["paper"].is_object() ? node["paper"] : node;

  auto text_of = [&](std::initializer_list<const char*> keys) -> std::string {
    for (const char* k : keys)
      if (p.contains(k) && p[k].is_string()) return p[k].get<std::string>();
    return {};
  };

  FeedEntry e;
  e.id = text_of({"id", "paper_id", "arxiv_id"});
  if (e.id.empty()) {
    warnings.add("feed entry without id skipped");
    return std::nullopt;
  }
  e.title = text_of({"title"});
  e.abstract = text_of({"summary", "abstract"});
  if (p.contains("authors") && p["authors"].is_array()) {
    for (const auto& a : p["authors"]) {
      if (a.is_string())
        e.authors.push_back(a.get<std::string>());
      else if (a.is_object() && a.contains("name") && a["name"].is_string())
        e.authors.push_back(a["name"].get<std::string>());
    }
  }
  for (const char* k : {"upvotes", "votes"})
    if (p.contains(k) && p[k].is_number()) e.upvotes = p[k].get<int>();
  e.published_at = text_of({"publishedAt", "published_at", "date"});
  auto pdf = text_of({"pdf", "pdf_url", "pdf_ref"});
  if (!pdf.empty()) e.pdf_ref = pdf;
  return e;
}

struct FetchOptions {
  int max_attempts = 5;
  int backoff_base_ms = 1000;  // doubles per attempt
  std::function<void(int)> sleep_ms = nullptr;
  std::function<std::string()> today = nullptr;  // ISO date; defaults to system UTC
};

inline std::string system_today_utc() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday);
  return buf;
}

// All entries the feed lists for the date. Empty days are normal (weekends
// commonly are); malformed entries are skipped per entry, never as a batch.
inline std::vector<FeedEntry> fetch_daily(FeedSource& source, const std::string& date,
                                          WarningLog& warnings, const FetchOptions& opts = {}) {
  if (!is_valid_date(date)) throw std::invalid_argument("bad date: " + date);
  std::string today = opts.today ? opts.today() : system_today_utc();
  if (date > today) throw std::invalid_argument("date is in the future: " + date);

  std::optional<std::string> payload;
  std::string last_error;
  int delay = opts.backoff_base_ms;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    try {
      payload = source.fetch(date);
      last_error.clear();
      break;
    } catch (const std::exception& e) {
      last_error = e.what();
      if (attempt < opts.max_attempts) {
        if (opts.sleep_ms)
          opts.sleep_ms(delay);
        else
          std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        delay *= 2;
      }
    }
  }
  if (!last_error.empty())
    throw FeedError("feed fetch failed after " + std::to_string(opts.max_attempts) +
                    " attempts: " + last_error);
  if (!payload) return {};

  json doc = json::parse(*payload, nullptr, false);
  if (doc.is_discarded()) {
    warnings.add("feed payload for " + date + " is not valid JSON, treating as empty");
    return {};
  }
  const json& items = doc.is_array() ? doc
                      : doc.contains("papers") && doc["papers"].is_array() ? doc["papers"]
                      : doc.contains("items") && doc["items"].is_array()  ? doc["items"]
                                                                          : doc;
  if (!items.is_array()) {
    warnings.add("feed payload for " + date + " has no entry list, treating as empty");
    return {};
  }

  std::vector<FeedEntry> out;
  for (const auto& node : items) {
    auto entry = parse_feed_entry(node, warnings);
    if (!entry) continue;
    // The feed's listing date governs partitioning: fill a missing
    // timestamp with the requested day and pin mismatches to it.
    std::string day = entry->published_at.size() >= 10 ? entry->published_at.substr(0, 10) : "";
    if (!is_valid_date(day)) {
      entry->published_at = date;
    } else if (day != date) {
      warnings.add("entry " + entry->id + " dated " + day + ", pinned to requested day " + date);
      entry->published_at = date;
    } else {
      entry->published_at = day;
    }
    out.push_back(std::move(*entry));
  }
  return out;
}

// Canonical arXiv identity: version suffix stripped, kept separately.
inline std::optional<PaperRecord> normalize(const FeedEntry& entry, WarningLog& warnings) {
  if (entry.id.empty()) {
    warnings.add("entry with empty id rejected");
    return std::nullopt;
  }
  std::string id = trim(entry.id);
  if (starts_with(id, "arXiv:")) id = id.substr(6);

  static const std::regex modern(R"((\d{4}\.\d{4,5})(v(\d+))?)");
  static const std::regex legacy(R"(([A-Za-z][A-Za-z.-]*/\d{7})(v(\d+))?)");
  std::smatch m;
  if (!std::regex_match(id, m, modern) && !std::regex_match(id, m, legacy)) {
    warnings.add("unparseable arXiv id rejected: " + entry.id);
    return std::nullopt;
  }

  PaperRecord r;
  r.paper_id = m[1];
  if (m[3].matched) r.version = std::stoi(m[3]);
  r.title = collapse_whitespace(entry.title);
  r.abstract = collapse_whitespace(entry.abstract);
  for (const auto& a : entry.authors) r.authors.push_back(collapse_whitespace(a));
  r.upvotes = entry.upvotes.value_or(0);
  r.published_at = entry.published_at;
  r.pdf_ref = entry.pdf_ref;
  return r;
}

// One record per paper_id: the highest-upvote occurrence wins, ties go to
// the earliest date. Output keeps first-occurrence order.
inline std::vector<PaperRecord> dedupe_month(const std::vector<PaperRecord>& records) {
  std::vector<PaperRecord> out;
  std::map<std::string, size_t> slot;
  for (const auto& r : records) {
    auto it = slot.find(r.paper_id);
    if (it == slot.end()) {
      slot[r.paper_id] = out.size();
      out.push_back(r);
      continue;
    }
    PaperRecord& held = out[it->second];
    if (r.upvotes > held.upvotes ||
        (r.upvotes == held.upvotes && r.published_at < held.published_at))
      held = r;
  }
  return out;
}

}  // namespace paperbrew
