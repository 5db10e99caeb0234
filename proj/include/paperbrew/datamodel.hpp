#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "paperbrew/dates.hpp"
#include "paperbrew/util.hpp"

// Record types for the four persisted datasets plus the in-memory
// trajectory type the lifecycle math runs on. All types are plain value
// objects; once constructed they are safe to share across threads.

namespace paperbrew {

using json = nlohmann::json;

struct PaperRecord {
  std::string paper_id;
  std::string title;
  std::vector<std::string> authors;
  std::string abstract;
  int upvotes = 0;
  std::string published_at;  // ISO date, UTC
  std::optional<std::string> pdf_ref;
  std::optional<int> version;  // arXiv version suffix, when the feed carried one
};

struct StructuredSummary {
  std::string paper_id;
  std::string concise_summary;
  std::string detailed_analysis;
  std::vector<std::string> topics;
  std::vector<std::string> keywords;
  std::string concise_summary_zh;
  std::string detailed_analysis_zh;
  std::vector<std::string> topics_zh;
  std::vector<std::string> keywords_zh;
  std::string provider_id;
  std::string extracted_at;
};

using RankedList = std::vector<std::pair<std::string, int>>;

struct DailyTrendReport {
  std::string date;
  std::string trending_summary;
  RankedList top_topics;
  RankedList keywords;
  std::string daily_report;
};

struct MonthlyTrendReport {
  std::string month;
  std::string trending_summary;
  RankedList top_topics;
  std::map<std::string, std::vector<std::string>> topic_mapping;
  std::string monthly_report;
};

enum class Phase { InnovationTrigger, Peak, Trough, Slope, Plateau };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::InnovationTrigger: return "InnovationTrigger";
    case Phase::Peak: return "Peak";
    case Phase::Trough: return "Trough";
    case Phase::Slope: return "Slope";
    case Phase::Plateau: return "Plateau";
  }
  return "Plateau";
}

inline std::optional<Phase> phase_from_name(std::string_view s) {
  if (s == "InnovationTrigger") return Phase::InnovationTrigger;
  if (s == "Peak") return Phase::Peak;
  if (s == "Trough") return Phase::Trough;
  if (s == "Slope") return Phase::Slope;
  if (s == "Plateau") return Phase::Plateau;
  return std::nullopt;
}

struct LifecycleEntry {
  Phase phase = Phase::Plateau;
  double peak_proportion = 0.0;   // all-time high of the monthly proportion
  std::string peak_month;
  double current_level = 0.0;     // mean proportion over the last 3 months
  double decline_ratio = 0.0;     // current_level / peak_proportion
  double trend_slope = 0.0;       // OLS slope over the last 6 months
  double recent_fraction = 0.0;   // share of papers in the last 8 months
  int total_count = 0;
  int active_months = 0;
};

struct LifecycleSnapshot {
  std::string snapshot_id;  // bi-month label, "YYYY-MM_YYYY-MM"
  std::map<std::string, LifecycleEntry> lifecycle_data;
  std::vector<std::string> sorted_months;
  std::map<std::string, std::map<std::string, int>> topics_by_month;
  std::map<std::string, int> total_by_month;
  int n_papers = 0;
  int n_months = 0;
};

// Sparse month-indexed series: only months with a nonzero paper count are
// stored; absent months read as zero.
struct TopicTrajectory {
  std::string label;
  std::map<std::string, int> counts;
  std::map<std::string, double> proportions;
  std::string first_month;
  std::string last_month;

  int count_at(const std::string& month) const {
    auto it = counts.find(month);
    return it == counts.end() ? 0 : it->second;
  }
  double proportion_at(const std::string& month) const {
    auto it = proportions.find(month);
    return it == proportions.end() ? 0.0 : it->second;
  }
};

// --- validation ------------------------------------------------------------

struct ValidationResult {
  std::vector<std::string> violations;
  std::vector<std::string> warnings;  // soft-bound strays, not failures

  bool ok() const { return violations.empty(); }
};

inline bool is_arxiv_id(const std::string& id) {
  static const std::regex modern(R"(\d{4}\.\d{4,5}(v\d+)?)");
  static const std::regex legacy(R"([A-Za-z][A-Za-z.-]*/\d{7}(v\d+)?)");
  return std::regex_match(id, modern) || std::regex_match(id, legacy);
}

inline ValidationResult validate_record(const PaperRecord& r) {
  ValidationResult res;
  if (!is_arxiv_id(r.paper_id))
    res.violations.push_back("paper_id does not match an arXiv identifier: " + r.paper_id);
  if (r.upvotes < 0) res.violations.push_back("upvotes must be >= 0");
  if (!is_valid_date(r.published_at))
    res.violations.push_back("published_at is not a valid calendar date: " + r.published_at);
  if (r.title.empty()) res.violations.push_back("title must be non-empty");
  if (r.abstract.empty()) res.violations.push_back("abstract must be non-empty");
  return res;
}

inline ValidationResult validate_record(const StructuredSummary& s) {
  ValidationResult res;
  size_t nt = s.topics.size(), nk = s.keywords.size();
  if (nt < 1 || nt > 5)
    res.violations.push_back("topics count must be within 1..5, got " + std::to_string(nt));
  else if (nt < 2 || nt > 3)
    res.warnings.push_back("topics count outside the 2..3 target: " + std::to_string(nt));
  if (nk < 1 || nk > 8)
    res.violations.push_back("keywords count must be within 1..8, got " + std::to_string(nk));
  else if (nk < 4 || nk > 6)
    res.warnings.push_back("keywords count outside the 4..6 target: " + std::to_string(nk));

  std::set<std::string> seen;
  for (const auto& t : s.topics)
    if (!seen.insert(collapse_whitespace(t)).second)
      res.violations.push_back("duplicate topic label after normalization: " + t);

  if (s.topics_zh.size() != nt)
    res.violations.push_back("topics_zh length differs from topics");
  if (s.keywords_zh.size() != nk)
    res.violations.push_back("keywords_zh length differs from keywords");
  return res;
}

inline ValidationResult validate_record(const DailyTrendReport& r) {
  ValidationResult res;
  if (!is_valid_date(r.date)) res.violations.push_back("date is not a valid calendar date");
  for (size_t i = 1; i < r.top_topics.size(); ++i) {
    const auto& [la, ca] = r.top_topics[i - 1];
    const auto& [lb, cb] = r.top_topics[i];
    if (ca < cb || (ca == cb && la > lb)) {
      res.violations.push_back("top_topics not sorted by count desc, ties lexicographic");
      break;
    }
  }
  return res;
}

inline ValidationResult validate_record(const MonthlyTrendReport& r) {
  ValidationResult res;
  if (!is_valid_month(r.month)) res.violations.push_back("month is not a valid YYYY-MM label");
  for (const auto& [label, count] : r.top_topics)
    if (!r.topic_mapping.count(label))
      res.violations.push_back("cluster missing from mapping: " + label);
  std::set<std::string> assigned;
  for (const auto& [cluster, members] : r.topic_mapping)
    for (const auto& m : members)
      if (!assigned.insert(m).second)
        res.violations.push_back("original label mapped to more than one cluster: " + m);
  return res;
}

inline ValidationResult validate_record(const LifecycleEntry& e) {
  ValidationResult res;
  if (e.peak_proportion < 0.0 || e.peak_proportion > 1.0)
    res.violations.push_back("peak_proportion outside [0,1]");
  if (e.recent_fraction < 0.0 || e.recent_fraction > 1.0)
    res.violations.push_back("recent_fraction outside [0,1]");
  if (e.peak_proportion > 0.0) {
    double expected = e.current_level / e.peak_proportion;
    if (std::abs(e.decline_ratio - expected) > 1e-9)
      res.violations.push_back("decline_ratio != current_level / peak_proportion");
  }
  if (e.decline_ratio < 0.0) res.violations.push_back("decline_ratio must be >= 0");
  return res;
}

inline ValidationResult validate_record(const LifecycleSnapshot& s) {
  ValidationResult res;
  for (size_t i = 1; i < s.sorted_months.size(); ++i) {
    if (months_between(s.sorted_months[i - 1], s.sorted_months[i]) != 1) {
      res.violations.push_back("sorted_months not strictly ascending and contiguous");
      break;
    }
  }
  if (s.n_months != static_cast<int>(s.sorted_months.size()))
    res.violations.push_back("n_months != |sorted_months|");
  std::map<std::string, int> stored_totals;
  for (const auto& [topic, per_month] : s.topics_by_month)
    for (const auto& [month, count] : per_month) stored_totals[month] += count;
  for (const auto& [month, sum] : stored_totals) {
    auto it = s.total_by_month.find(month);
    if (it == s.total_by_month.end() || sum > it->second) {
      res.violations.push_back("stored topic counts exceed total_by_month for " + month);
      break;
    }
  }
  for (const auto& [topic, entry] : s.lifecycle_data) {
    auto sub = validate_record(entry);
    for (auto& v : sub.violations) res.violations.push_back(topic + ": " + v);
  }
  return res;
}

inline ValidationResult validate_record(const TopicTrajectory& t) {
  ValidationResult res;
  for (const auto& [month, p] : t.proportions)
    if (p < 0.0 || p > 1.0) {
      res.violations.push_back("proportion outside [0,1] at " + month);
      break;
    }
  for (const auto& [month, c] : t.counts) {
    if (month < t.first_month || month > t.last_month) {
      res.violations.push_back("month outside [first_month, last_month]: " + month);
      break;
    }
    if (c < 0) res.violations.push_back("negative count at " + month);
  }
  return res;
}

// --- serialization ---------------------------------------------------------
// One JSON object per record, snake_case keys, ISO-8601 dates. nlohmann's
// std::map backing emits keys in sorted order, so dumps are canonical and
// re-serialization is byte-stable.

inline void to_json(json& j, const PaperRecord& r) {
  j = json{{"paper_id", r.paper_id},   {"title", r.title},
           {"authors", r.authors},     {"abstract", r.abstract},
           {"upvotes", r.upvotes},     {"published_at", r.published_at}};
  if (r.pdf_ref) j["pdf_ref"] = *r.pdf_ref;
  if (r.version) j["version"] = *r.version;
}

inline void from_json(const json& j, PaperRecord& r) {
  j.at("paper_id").get_to(r.paper_id);
  j.at("title").get_to(r.title);
  j.at("authors").get_to(r.authors);
  j.at("abstract").get_to(r.abstract);
  j.at("upvotes").get_to(r.upvotes);
  j.at("published_at").get_to(r.published_at);
  r.pdf_ref = j.contains("pdf_ref") ? std::optional<std::string>(j["pdf_ref"].get<std::string>())
                                    : std::nullopt;
  r.version = j.contains("version") ? std::optional<int>(j["version"].get<int>()) : std::nullopt;
}

inline void to_json(json& j, const StructuredSummary& s) {
  j = json{{"paper_id", s.paper_id},
           {"concise_summary", s.concise_summary},
           {"detailed_analysis", s.detailed_analysis},
           {"topics", s.topics},
           {"keywords", s.keywords},
           {"concise_summary_zh", s.concise_summary_zh},
           {"detailed_analysis_zh", s.detailed_analysis_zh},
           {"topics_zh", s.topics_zh},
           {"keywords_zh", s.keywords_zh},
           {"provider_id", s.provider_id},
           {"extracted_at", s.extracted_at}};
}

inline void from_json(const json& j, StructuredSummary& s) {
  j.at("paper_id").get_to(s.paper_id);
  j.at("concise_summary").get_to(s.concise_summary);
  j.at("detailed_analysis").get_to(s.detailed_analysis);
  j.at("topics").get_to(s.topics);
  j.at("keywords").get_to(s.keywords);
  j.at("concise_summary_zh").get_to(s.concise_summary_zh);
  j.at("detailed_analysis_zh").get_to(s.detailed_analysis_zh);
  j.at("topics_zh").get_to(s.topics_zh);
  j.at("keywords_zh").get_to(s.keywords_zh);
  j.at("provider_id").get_to(s.provider_id);
  j.at("extracted_at").get_to(s.extracted_at);
}

inline void to_json(json& j, const DailyTrendReport& r) {
  j = json{{"date", r.date},
           {"trending_summary", r.trending_summary},
           {"top_topics", r.top_topics},
           {"keywords", r.keywords},
           {"daily_report", r.daily_report}};
}

inline void from_json(const json& j, DailyTrendReport& r) {
  j.at("date").get_to(r.date);
  j.at("trending_summary").get_to(r.trending_summary);
  j.at("top_topics").get_to(r.top_topics);
  j.at("keywords").get_to(r.keywords);
  j.at("daily_report").get_to(r.daily_report);
}

inline void to_json(json& j, const MonthlyTrendReport& r) {
  j = json{{"month", r.month},
           {"trending_summary", r.trending_summary},
           {"top_topics", r.top_topics},
           {"topic_mapping", r.topic_mapping},
           {"monthly_report", r.monthly_report}};
}

inline void from_json(const json& j, MonthlyTrendReport& r) {
  j.at("month").get_to(r.month);
  j.at("trending_summary").get_to(r.trending_summary);
  j.at("top_topics").get_to(r.top_topics);
  j.at("topic_mapping").get_to(r.topic_mapping);
  j.at("monthly_report").get_to(r.monthly_report);
}

inline void to_json(json& j, const LifecycleEntry& e) {
  j = json{{"phase", phase_name(e.phase)},
           {"peak_proportion", e.peak_proportion},
           {"peak_month", e.peak_month},
           {"current_level", e.current_level},
           {"decline_ratio", e.decline_ratio},
           {"trend_slope", e.trend_slope},
           {"recent_fraction", e.recent_fraction},
           {"total_count", e.total_count},
           {"active_months", e.active_months}};
}

inline void from_json(const json& j, LifecycleEntry& e) {
  auto phase = phase_from_name(j.at("phase").get<std::string>());
  if (!phase) throw std::invalid_argument("unknown lifecycle phase: " + j.at("phase").dump());
  e.phase = *phase;
  j.at("peak_proportion").get_to(e.peak_proportion);
  j.at("peak_month").get_to(e.peak_month);
  j.at("current_level").get_to(e.current_level);
  j.at("decline_ratio").get_to(e.decline_ratio);
  j.at("trend_slope").get_to(e.trend_slope);
  j.at("recent_fraction").get_to(e.recent_fraction);
  j.at("total_count").get_to(e.total_count);
  j.at("active_months").get_to(e.active_months);
}

inline void to_json(json& j, const LifecycleSnapshot& s) {
  j = json{{"snapshot_id", s.snapshot_id},
           {"lifecycle_data", s.lifecycle_data},
           {"sorted_months", s.sorted_months},
           {"topics_by_month", s.topics_by_month},
           {"total_by_month", s.total_by_month},
           {"n_papers", s.n_papers},
           {"n_months", s.n_months}};
}

inline void from_json(const json& j, LifecycleSnapshot& s) {
  j.at("snapshot_id").get_to(s.snapshot_id);
  j.at("lifecycle_data").get_to(s.lifecycle_data);
  j.at("sorted_months").get_to(s.sorted_months);
  j.at("topics_by_month").get_to(s.topics_by_month);
  j.at("total_by_month").get_to(s.total_by_month);
  j.at("n_papers").get_to(s.n_papers);
  j.at("n_months").get_to(s.n_months);
}

inline void to_json(json& j, const TopicTrajectory& t) {
  j = json{{"label", t.label},
           {"counts", t.counts},
           {"proportions", t.proportions},
           {"first_month", t.first_month},
           {"last_month", t.last_month}};
}

inline void from_json(const json& j, TopicTrajectory& t) {
  j.at("label").get_to(t.label);
  j.at("counts").get_to(t.counts);
  j.at("proportions").get_to(t.proportions);
  j.at("first_month").get_to(t.first_month);
  j.at("last_month").get_to(t.last_month);
}

}  // namespace paperbrew
