#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "paperbrew/datamodel.hpp"
#include "paperbrew/provider.hpp"
#include "paperbrew/store.hpp"

// Turns PaperRecords into StructuredSummaries through a provider, with
// tolerant output parsing, repair retries, and a cache gate that makes
// batch processing idempotent and cleanly resumable.

namespace paperbrew {

struct SummarizeOptions {
  bool include_pdf = false;
  size_t pdf_byte_cap = 20 * 1024 * 1024;
  int max_attempts = 3;
  int concurrency = 4;
  std::function<std::string()> now = nullptr;  // extraction timestamp source
};

inline std::string system_now_iso() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

inline std::string summary_instruction() {
  return "Summarize the paper below. Respond with a single JSON object containing "
         "concise_summary (2-4 sentences), detailed_analysis (pros and cons), "
         "topics (2-3 free-form topic labels), keywords (4-6 canonical terms), and "
         "the same four fields in Chinese under a _zh suffix "
         "(concise_summary_zh, detailed_analysis_zh, topics_zh, keywords_zh). "
         "Produce both languages in this one response.";
}

inline std::string repair_instruction(const std::string& malformed) {
  return "Your previous output could not be parsed. Return only a valid JSON object "
         "matching the requested schema, with no surrounding text.\n\nPrevious output:\n" +
         malformed;
}

// Title and abstract always travel; PDF bytes only when asked for,
// resolvable, and under the byte cap. Any PDF problem degrades to a
// text-only request rather than aborting.
inline ProviderRequest build_request(const PaperRecord& record, bool include_pdf,
                                     WarningLog& warnings,
                                     size_t pdf_byte_cap = 20 * 1024 * 1024) {
  ProviderRequest req;
  req.instruction = summary_instruction();
  req.title = record.title;
  req.abstract = record.abstract;
  req.schema = summary_schema();
  if (include_pdf && record.pdf_ref) {
    std::filesystem::path path(*record.pdf_ref);
    std::error_code ec;
    auto size = std::filesystem::file_size(path, ec);
    if (ec) {
      warnings.add("pdf_ref not resolvable for " + record.paper_id + ", sending text only");
    } else if (size > pdf_byte_cap) {
      warnings.add("pdf for " + record.paper_id + " exceeds byte cap, sending text only");
    } else {
      std::ifstream in(path, std::ios::binary);
      if (!in) {
        warnings.add("pdf unreadable for " + record.paper_id + ", sending text only");
      } else {
        req.pdf_bytes = std::string(std::istreambuf_iterator<char>(in),
                                    std::istreambuf_iterator<char>());
      }
    }
  }
  return req;
}

// First balanced {...} slice that parses, so prose or code fences around
// the object are tolerated.
inline std::optional<json> extract_first_json_object(const std::string& text) {
  for (size_t start = 0; start < text.size(); ++start) {
    if (text[start] != '{') continue;
    int depth = 0;
    bool in_string = false, escaped = false;
    for (size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped)
          escaped = false;
        else if (c == '\\')
          escaped = true;
        else if (c == '"')
          in_string = false;
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == '{') {
        ++depth;
      } else if (c == '}') {
        if (--depth == 0) {
          json parsed = json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (!parsed.is_discarded()) return parsed;
          break;  // balanced but unparseable; try the next '{'
        }
      }
    }
  }
  return std::nullopt;
}

struct ParseOutcome {
  std::optional<StructuredSummary> summary;
  std::string error;  // set on failure, alongside the raw text for retry
  std::string raw;
  std::vector<std::string> warnings;

  bool ok() const { return summary.has_value(); }
};

namespace detail {

inline std::optional<std::vector<std::string>> string_list(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_array()) return std::nullopt;
  std::vector<std::string> out;
  for (const auto& item : j[key]) {
    if (!item.is_string()) return std::nullopt;
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace detail

// Every output field is the response text or a documented normalization of
// it: topic/keyword labels are trimmed and whitespace-collapsed, duplicate
// topics (after normalization) collapse to the first occurrence.
inline ParseOutcome parse_summary(const ProviderResponse& response, const std::string& paper_id) {
  ParseOutcome out;
  out.raw = response.raw;
  auto parsed = extract_first_json_object(response.raw);
  if (!parsed) {
    out.error = "no parseable JSON object in response";
    return out;
  }
  const json& j = *parsed;

  StructuredSummary s;
  s.paper_id = paper_id;
  s.provider_id = response.provider_id;
  for (const char* key : {"concise_summary", "detailed_analysis", "concise_summary_zh",
                          "detailed_analysis_zh"}) {
    if (!j.contains(key) || !j[key].is_string()) {
      out.error = std::string("missing or non-string field: ") + key;
      return out;
    }
  }
  s.concise_summary = j["concise_summary"].get<std::string>();
  s.detailed_analysis = j["detailed_analysis"].get<std::string>();
  s.concise_summary_zh = j["concise_summary_zh"].get<std::string>();
  s.detailed_analysis_zh = j["detailed_analysis_zh"].get<std::string>();

  auto topics = detail::string_list(j, "topics");
  auto keywords = detail::string_list(j, "keywords");
  auto topics_zh = detail::string_list(j, "topics_zh");
  auto keywords_zh = detail::string_list(j, "keywords_zh");
  if (!topics || !keywords || !topics_zh || !keywords_zh) {
    out.error = "missing or malformed list field";
    return out;
  }

  // Collapse duplicate topics, keeping the zh counterpart aligned.
  std::set<std::string> seen;
  for (size_t i = 0; i < topics->size(); ++i) {
    std::string label = collapse_whitespace((*topics)[i]);
    if (label.empty() || !seen.insert(label).second) continue;
    s.topics.push_back(label);
    s.topics_zh.push_back(i < topics_zh->size() ? collapse_whitespace((*topics_zh)[i]) : label);
  }
  for (const auto& k : *keywords) {
    std::string kw = collapse_whitespace(k);
    if (!kw.empty()) s.keywords.push_back(kw);
  }
  for (const auto& k : *keywords_zh) s.keywords_zh.push_back(collapse_whitespace(k));
  if (s.topics_zh.size() != s.topics.size() && topics_zh->size() != topics->size()) {
    out.error = "topics_zh length differs from topics";
    return out;
  }
  if (s.keywords_zh.size() != s.keywords.size()) {
    out.error = "keywords_zh length differs from keywords";
    return out;
  }

  s.extracted_at = j.contains("extracted_at") && j["extracted_at"].is_string()
                       ? j["extracted_at"].get<std::string>()
                       : "";

  auto validation = validate_record(s);
  if (!validation.ok()) {
    out.error = "summary violates hard bounds: " + validation.violations.front();
    return out;
  }
  out.warnings = validation.warnings;
  out.summary = std::move(s);
  return out;
}

struct SummarizeFailure {
  std::string paper_id;
  std::string error;
  int attempts = 0;
};

struct SummarizeOneResult {
  std::optional<StructuredSummary> summary;
  std::optional<SummarizeFailure> failure;
  int attempts = 0;
};

// Provider call + parse, re-prompting with a repair instruction on parse
// failure, up to max_attempts calls in total. Success is checkpointed via
// the store before returning.
inline SummarizeOneResult summarize_one(const PaperRecord& record, Provider& provider,
                                        Store& store, WarningLog& warnings,
                                        const SummarizeOptions& opts = {}) {
  if (opts.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
  SummarizeOneResult result;
  std::string last_error;
  for (int attempt = 1; attempt <= opts.max_attempts; ++attempt) {
    result.attempts = attempt;
    ProviderRequest req = build_request(record, opts.include_pdf, warnings, opts.pdf_byte_cap);
    if (attempt > 1) req.instruction = repair_instruction(last_error);
    ProviderResponse resp;
    try {
      resp = provider.complete(req);
    } catch (const std::exception& e) {
      last_error = std::string("provider call failed: ") + e.what();
      continue;
    }
    ParseOutcome parsed = parse_summary(resp, record.paper_id);
    if (!parsed.ok()) {
      last_error = parsed.error + "\n" + parsed.raw;
      continue;
    }
    for (const auto& w : parsed.warnings) warnings.add(record.paper_id + ": " + w);
    StructuredSummary summary = *parsed.summary;
    if (summary.extracted_at.empty())
      summary.extracted_at = opts.now ? opts.now() : system_now_iso();
    store.upsert_summary(summary, record.published_at);
    result.summary = std::move(summary);
    return result;
  }
  result.failure = SummarizeFailure{record.paper_id, last_error, result.attempts};
  return result;
}

struct BatchReport {
  int succeeded = 0;
  int skipped_cached = 0;
  int failed = 0;
  std::vector<SummarizeFailure> dead_letters;
};

inline void to_json(json& j, const BatchReport& r) {
  json letters = json::array();
  for (const auto& f : r.dead_letters)
    letters.push_back(json{{"paper_id", f.paper_id}, {"error", f.error}, {"attempts", f.attempts}});
  j = json{{"succeeded", r.succeeded},
           {"skipped_cached", r.skipped_cached},
           {"failed", r.failed},
           {"dead_letters", letters}};
}

// Cache gate first (a hit on either tier skips the paper), then bounded
// fan-out over the remainder. Failures are itemized, never fatal to the
// batch; counts always sum to the input size.
inline BatchReport summarize_batch(const std::vector<PaperRecord>& records, Provider& provider,
                                   Store& store, WarningLog& warnings,
                                   const SummarizeOptions& opts = {}) {
  BatchReport report;
  std::vector<const PaperRecord*> pending;
  for (const auto& record : records) {
    if (store.has_summary(record.paper_id) != CacheTier::Absent)
      ++report.skipped_cached;
    else
      pending.push_back(&record);
  }

  std::mutex mutex;  // guards report and warnings across workers
  std::atomic<size_t> next{0};
  int workers = std::max(1, std::min<int>(opts.concurrency, static_cast<int>(pending.size())));
  auto work = [&] {
    WarningLog local;
    for (size_t i = next.fetch_add(1); i < pending.size(); i = next.fetch_add(1)) {
      SummarizeOneResult one = summarize_one(*pending[i], provider, store, local, opts);
      std::lock_guard<std::mutex> lock(mutex);
      if (one.summary)
        ++report.succeeded;
      else {
        ++report.failed;
        report.dead_letters.push_back(*one.failure);
      }
    }
    std::lock_guard<std::mutex> lock(mutex);
    for (const auto& w : local.messages()) warnings.add(w);
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (int i = 0; i < workers; ++i) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  std::sort(report.dead_letters.begin(), report.dead_letters.end(),
            [](const SummarizeFailure& a, const SummarizeFailure& b) {
              return a.paper_id < b.paper_id;
            });
  return report;
}

// Per-day dead-letter partitions for later replay; merged by paper_id so
// replays stay idempotent.
inline void write_dead_letters(Store& store, const std::vector<PaperRecord>& records,
                               const std::vector<SummarizeFailure>& failures) {
  if (failures.empty()) return;
  std::map<std::string, std::string> date_of;
  for (const auto& r : records) date_of[r.paper_id] = r.published_at;
  std::map<std::string, std::map<std::string, json>> by_date;
  for (const auto& f : failures) {
    auto it = date_of.find(f.paper_id);
    std::string date = it == date_of.end() ? "unknown" : it->second;
    by_date[date][f.paper_id] =
        json{{"paper_id", f.paper_id}, {"error", f.error}, {"attempts", f.attempts}};
  }
  for (const auto& [date, items] : by_date) {
    fs::path path = store.data_dir() / "deadletter" / (date + ".jsonl");
    std::map<std::string, json> merged;
    if (fs::exists(path)) {
      std::ifstream in(path);
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (!j.is_discarded() && j.contains("paper_id"))
          merged[j["paper_id"].get<std::string>()] = j;
      }
    }
    for (const auto& [id, j] : items) merged[id] = j;
    std::string payload;
    for (const auto& [id, j] : merged) {
      payload += j.dump();
      payload += '\n';
    }
    store.write_file(path, payload);
  }
}

}  // namespace paperbrew
