#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "paperbrew/analytics.hpp"
#include "paperbrew/datamodel.hpp"
#include "paperbrew/provider.hpp"
#include "paperbrew/store.hpp"
#include "paperbrew/summarize.hpp"

// Renders daily, monthly, and lifecycle outputs as Markdown for humans,
// JSON for machines, and CSV series for plotting. Rendering is
// deterministic given its inputs; provider-generated narrative text is
// confined to the trending_summary field and falls back to a template.

namespace paperbrew {

namespace detail {

inline std::string fixed(double v, int places) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", places, v);
  return buf;
}

inline std::string join_labels(const RankedList& ranked, size_t limit) {
  std::string out;
  for (size_t i = 0; i < ranked.size() && i < limit; ++i) {
    if (!out.empty()) out += ", ";
    out += ranked[i].first;
  }
  return out;
}

inline RankedList rank_counts(const std::map<std::string, int>& counts) {
  RankedList ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  return ranked;
}

// Optional narrative from a provider; any failure degrades to the
// deterministic template so reports never block on a model.
inline std::string narrative_or(const std::string& fallback, Provider* provider,
                                const std::string& instruction, WarningLog* warnings) {
  if (provider == nullptr) return fallback;
  try {
    ProviderRequest req;
    req.instruction = instruction;
    ResponseSchema schema;
    schema.fields.push_back({"summary", false, 0, 0});
    req.schema = schema;
    std::string raw = trim(provider->complete(req).raw);
    if (auto parsed = extract_first_json_object(raw);
        parsed && parsed->contains("summary") && (*parsed)["summary"].is_string())
      return (*parsed)["summary"].get<std::string>();
    if (!raw.empty()) return raw;
  } catch (const std::exception& e) {
    if (warnings) warnings->add(std::string("narrative provider failed: ") + e.what());
  }
  return fallback;
}

inline std::string csv_cell(const std::string& value) {
  if (value.find_first_of(",\"\n\r") == std::string::npos) return value;
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

}  // namespace detail

// --- daily -----------------------------------------------------------------

// Daily digest: papers sorted by upvotes (ties by id), ranked topics and
// keywords, and a summary line. Emits reports/daily/<date>.{md,json}.
// An empty day still yields a report.
inline DailyTrendReport render_daily(const std::string& date,
                                     const std::vector<PaperRecord>& records,
                                     const std::vector<StructuredSummary>& summaries,
                                     Store& store, Provider* narrative_provider = nullptr,
                                     WarningLog* warnings = nullptr) {
  if (!is_valid_date(date)) throw std::invalid_argument("bad date: " + date);
  std::map<std::string, const StructuredSummary*> summary_of;
  for (const auto& s : summaries) summary_of[s.paper_id] = &s;

  std::vector<const PaperRecord*> ordered;
  for (const auto& r : records) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(), [](const PaperRecord* a, const PaperRecord* b) {
    return a->upvotes != b->upvotes ? a->upvotes > b->upvotes : a->paper_id < b->paper_id;
  });

  std::map<std::string, int> topic_counts, keyword_counts;
  for (const auto* r : ordered) {
    auto it = summary_of.find(r->paper_id);
    if (it == summary_of.end()) continue;
    std::set<std::string> topics(it->second->topics.begin(), it->second->topics.end());
    std::set<std::string> keywords(it->second->keywords.begin(), it->second->keywords.end());
    for (const auto& t : topics) topic_counts[t] += 1;
    for (const auto& k : keywords) keyword_counts[k] += 1;
  }

  DailyTrendReport report;
  report.date = date;
  report.top_topics = detail::rank_counts(topic_counts);
  report.keywords = detail::rank_counts(keyword_counts);

  std::string tmpl = std::to_string(ordered.size()) + " papers; top topics: " +
                     (report.top_topics.empty() ? std::string("none")
                                                : detail::join_labels(report.top_topics, 5));
  report.trending_summary = detail::narrative_or(
      tmpl, narrative_provider,
      "Write a one-paragraph summary of today's trending papers. Respond as JSON "
      "{\"summary\": ...}.\n\n" + tmpl,
      warnings);

  std::string md;
  md += "# Daily Trending Papers: " + date + "\n\n";
  md += report.trending_summary + "\n\n";
  md += "| # | Paper | Title | Upvotes | Topics |\n";
  md += "|---|-------|-------|---------|--------|\n";
  int rank = 1;
  for (const auto* r : ordered) {
    std::string topics;
    if (auto it = summary_of.find(r->paper_id); it != summary_of.end()) {
      for (const auto& t : it->second->topics) {
        if (!topics.empty()) topics += "; ";
        topics += t;
      }
    }
    md += "| " + std::to_string(rank++) + " | " + r->paper_id + " | " + r->title + " | " +
          std::to_string(r->upvotes) + " | " + topics + " |\n";
  }
  if (!ordered.empty()) {
    md += "\n## Summaries\n";
    for (const auto* r : ordered) {
      auto it = summary_of.find(r->paper_id);
      if (it == summary_of.end()) continue;
      md += "\n### " + r->paper_id + ": " + r->title + "\n\n";
      md += it->second->concise_summary + "\n";
    }
  }
  report.daily_report = md;

  json j(report);
  store.write_file(store.data_dir() / "reports" / "daily" / (date + ".md"), md);
  store.write_file(store.data_dir() / "reports" / "daily" / (date + ".json"),
                   j.dump(2) + "\n");
  return report;
}

// --- monthly ---------------------------------------------------------------

// Monthly digest over deduplicated records: top-5 consolidated clusters
// with share and cumulative share, the full cluster drill-down, and
// trending keywords. Emits reports/monthly/<month>.{md,json}.
inline MonthlyTrendReport render_monthly(const std::string& month,
                                         const std::vector<PaperRecord>& records,
                                         const std::vector<StructuredSummary>& summaries,
                                         const MonthlyTrendReport& consolidation, Store& store,
                                         Provider* narrative_provider = nullptr,
                                         WarningLog* warnings = nullptr) {
  if (!is_valid_month(month)) throw std::invalid_argument("bad month: " + month);
  if (consolidation.month != month || (!records.empty() && consolidation.topic_mapping.empty()))
    throw StoreError("no consolidation for " + month + "; run the consolidate step first");

  MonthlyTrendReport report = consolidation;

  std::map<std::string, int> keyword_counts;
  for (const auto& s : summaries) {
    std::set<std::string> keywords(s.keywords.begin(), s.keywords.end());
    for (const auto& k : keywords) keyword_counts[k] += 1;
  }
  RankedList keywords = detail::rank_counts(keyword_counts);

  std::string tmpl = std::to_string(records.size()) + " papers; top topics: " +
                     (report.top_topics.empty() ? std::string("none")
                                                : detail::join_labels(report.top_topics, 5));
  report.trending_summary = detail::narrative_or(
      tmpl, narrative_provider,
      "Write a one-paragraph summary of this month's research trends. Respond as JSON "
      "{\"summary\": ...}.\n\n" + tmpl,
      warnings);

  long total_assignments = 0;
  for (const auto& [cluster, count] : report.top_topics) total_assignments += count;

  std::string md;
  md += "# Monthly Trending Papers: " + month + "\n\n";
  md += report.trending_summary + "\n\n";
  md += "## Top Topics\n\n";
  md += "| Rank | Topic | Count | % | Cum% |\n";
  md += "|------|-------|-------|---|------|\n";
  double cum = 0.0;
  for (size_t i = 0; i < report.top_topics.size() && i < 5; ++i) {
    const auto& [cluster, count] = report.top_topics[i];
    double share = total_assignments > 0 ? 100.0 * count / total_assignments : 0.0;
    cum += share;
    md += "| " + std::to_string(i + 1) + " | " + cluster + " | " + std::to_string(count) +
          " | " + detail::fixed(share, 1) + " | " + detail::fixed(cum, 1) + " |\n";
  }
  md += "\n## Topic Mapping\n\n";
  for (const auto& [cluster, count] : report.top_topics) {
    std::string members;
    for (const auto& m : report.topic_mapping.at(cluster)) {
      if (!members.empty()) members += "; ";
      members += m;
    }
    md += "- " + cluster + " (" + std::to_string(count) + "): " + members + "\n";
  }
  if (!keywords.empty()) {
    md += "\n## Trending Keywords\n\n";
    std::string line;
    for (size_t i = 0; i < keywords.size() && i < 10; ++i) {
      if (!line.empty()) line += ", ";
      line += keywords[i].first + " (" + std::to_string(keywords[i].second) + ")";
    }
    md += line + "\n";
  }
  report.monthly_report = md;

  json j(report);
  store.write_file(store.data_dir() / "reports" / "monthly" / (month + ".md"), md);
  store.write_file(store.data_dir() / "reports" / "monthly" / (month + ".json"),
                   j.dump(2) + "\n");
  return report;
}

// --- lifecycle -------------------------------------------------------------

struct HypeCyclePlacement {
  std::string topic;
  Phase phase = Phase::Plateau;
  double x = 0.0;         // position along the canonical hype curve
  double dot_size = 0.0;  // proportional to total paper count
};

// Phase bands along the curve: disjoint, ordered, covering [0,1].
inline std::pair<double, double> phase_band(Phase p) {
  switch (p) {
    case Phase::InnovationTrigger: return {0.0, 0.18};
    case Phase::Peak: return {0.18, 0.38};
    case Phase::Trough: return {0.38, 0.60};
    case Phase::Slope: return {0.60, 0.80};
    case Phase::Plateau: return {0.80, 1.0};
  }
  return {0.0, 1.0};
}

// Within a phase, topics are ordered by descending total count (ties by
// name) and spaced evenly across the open band interior.
inline std::vector<HypeCyclePlacement> place_on_hype_curve(const LifecycleSnapshot& snapshot) {
  std::vector<HypeCyclePlacement> out;
  for (Phase phase : {Phase::InnovationTrigger, Phase::Peak, Phase::Trough, Phase::Slope,
                      Phase::Plateau}) {
    std::vector<std::pair<std::string, const LifecycleEntry*>> members;
    for (const auto& [topic, entry] : snapshot.lifecycle_data)
      if (entry.phase == phase) members.push_back({topic, &entry});
    std::sort(members.begin(), members.end(), [](const auto& a, const auto& b) {
      return a.second->total_count != b.second->total_count
                 ? a.second->total_count > b.second->total_count
                 : a.first < b.first;
    });
    auto [lo, hi] = phase_band(phase);
    for (size_t i = 0; i < members.size(); ++i) {
      HypeCyclePlacement p;
      p.topic = members[i].first;
      p.phase = phase;
      p.x = lo + (hi - lo) * (i + 1.0) / (members.size() + 1.0);
      p.dot_size = members[i].second->total_count;
      out.push_back(std::move(p));
    }
  }
  return out;
}

inline void to_json(json& j, const HypeCyclePlacement& p) {
  j = json{{"topic", p.topic},
           {"phase", phase_name(p.phase)},
           {"x", p.x},
           {"dot_size", p.dot_size}};
}

// Per-topic indicator table plus hype-curve placements. Emits
// reports/lifecycle/<snapshot_id>.{md,json}. An empty snapshot is a
// fault: there is nothing to place.
inline std::vector<HypeCyclePlacement> render_lifecycle(const LifecycleSnapshot& snapshot,
                                                        Store& store) {
  if (snapshot.lifecycle_data.empty())
    throw std::invalid_argument("empty lifecycle snapshot: nothing to render");
  auto placements = place_on_hype_curve(snapshot);

  std::string md;
  md += "# Topic Lifecycle: " + snapshot.snapshot_id + "\n\n";
  md += std::to_string(snapshot.lifecycle_data.size()) + " topics over " +
        std::to_string(snapshot.n_months) + " months, " + std::to_string(snapshot.n_papers) +
        " papers.\n\n";
  md += "| Topic | Phase | Peak | Peak Month | Current/Peak | Slope | Recent Share | Papers |\n";
  md += "|-------|-------|------|------------|--------------|-------|--------------|--------|\n";
  for (const auto& p : placements) {
    const LifecycleEntry& e = snapshot.lifecycle_data.at(p.topic);
    md += "| " + p.topic + " | " + phase_name(e.phase) + " | " +
          detail::fixed(e.peak_proportion, 4) + " | " + e.peak_month + " | " +
          detail::fixed(e.decline_ratio, 3) + " | " + detail::fixed(e.trend_slope, 5) + " | " +
          detail::fixed(e.recent_fraction, 3) + " | " + std::to_string(e.total_count) + " |\n";
  }
  md += "\n## Hype Curve Placement\n\n";
  md += "| Topic | Phase | x | Dot Size |\n";
  md += "|-------|-------|---|----------|\n";
  for (const auto& p : placements)
    md += "| " + p.topic + " | " + phase_name(p.phase) + " | " + detail::fixed(p.x, 4) +
          " | " + std::to_string(static_cast<int>(p.dot_size)) + " |\n";

  json j;
  j["snapshot"] = json(snapshot);
  j["placements"] = json(placements);
  store.write_file(store.data_dir() / "reports" / "lifecycle" / (snapshot.snapshot_id + ".md"),
                   md);
  store.write_file(store.data_dir() / "reports" / "lifecycle" / (snapshot.snapshot_id + ".json"),
                   j.dump(2) + "\n");
  return placements;
}

// --- plot series -----------------------------------------------------------

struct SeriesColumn {
  std::string name;
  std::vector<std::optional<double>> values;
};

// Delimiter-separated plot data with a header row; gaps become empty
// cells. Emits plots/<name>.csv.
inline void emit_series(Store& store, const std::string& name,
                        const std::string& label_header,
                        const std::vector<std::string>& row_labels,
                        const std::vector<SeriesColumn>& columns) {
  for (const auto& col : columns)
    if (col.values.size() != row_labels.size())
      throw std::invalid_argument("column " + col.name + " length differs from row labels");
  std::string csv = detail::csv_cell(label_header);
  for (const auto& col : columns) csv += "," + detail::csv_cell(col.name);
  csv += "\n";
  for (size_t i = 0; i < row_labels.size(); ++i) {
    csv += detail::csv_cell(row_labels[i]);
    for (const auto& col : columns)
      csv += "," + (col.values[i] ? detail::csv_cell(format_double(*col.values[i]))
                                  : std::string());
    csv += "\n";
  }
  store.write_file(store.data_dir() / "plots" / (name + ".csv"), csv);
}

// Raw plus Gaussian-smoothed variants of one monthly series.
inline void emit_trajectory(Store& store, const std::string& name,
                            const std::vector<std::string>& months,
                            const std::vector<std::optional<double>>& raw, double sigma = 0.8) {
  std::vector<SeriesColumn> columns;
  columns.push_back({"raw", raw});
  columns.push_back({"smoothed", gaussian_smooth(raw, sigma)});
  emit_series(store, name, "month", months, columns);
}

}  // namespace paperbrew
