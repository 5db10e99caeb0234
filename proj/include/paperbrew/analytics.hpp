#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paperbrew/datamodel.hpp"
#include "paperbrew/dates.hpp"
#include "paperbrew/util.hpp"

// Every quantitative procedure over the corpus: proportions, lifecycle
// indicators and phase classification, entropy, emergence, co-occurrence,
// keyword evolution, velocity, PMI novelty, and engagement statistics.
// All functions are pure and deterministic over an immutable CorpusIndex.

namespace paperbrew {

// --- corpus index ----------------------------------------------------------

// Forward and inverted maps over the summarized corpus. N_t is the total
// number of topic assignments in a month (a paper with 3 topics
// contributes 3), distinct from the month's paper count.
struct CorpusIndex {
  std::map<std::string, PaperRecord> papers;
  std::map<std::string, std::vector<std::string>> topics_of;
  std::map<std::string, std::vector<std::string>> keywords_of;
  std::map<std::string, std::set<std::string>> papers_of;
  std::map<std::string, int> assignments_by_month;  // N_t
  std::map<std::string, int> papers_by_month;
  std::vector<std::string> months;  // contiguous span, earliest to latest

  int total_papers() const { return static_cast<int>(papers.size()); }
  std::string month_of_paper(const std::string& id) const {
    return month_of(papers.at(id).published_at);
  }
};

// Month-keyed label-to-cluster mappings, for building the index over
// consolidated topics instead of raw labels.
using MonthlyMappings = std::map<std::string, std::map<std::string, std::string>>;

// Joins summaries with their records. Papers lacking summaries are
// excluded; a summary without a record breaks referential integrity and
// faults with the offending ids. When mappings are given, each topic
// label is replaced by its month's cluster before indexing; labels a
// mapping does not cover pass through unchanged.
inline CorpusIndex build_index(const std::vector<StructuredSummary>& summaries,
                               const std::vector<PaperRecord>& records,
                               const MonthlyMappings* mappings = nullptr) {
  std::map<std::string, const PaperRecord*> by_id;
  for (const auto& r : records) by_id[r.paper_id] = &r;

  std::vector<std::string> orphans;
  for (const auto& s : summaries)
    if (!by_id.count(s.paper_id)) orphans.push_back(s.paper_id);
  if (!orphans.empty()) {
    std::string msg = "summaries without matching records:";
    for (const auto& id : orphans) msg += " " + id;
    throw std::invalid_argument(msg);
  }

  CorpusIndex index;
  for (const auto& s : summaries) {
    const PaperRecord& record = *by_id.at(s.paper_id);
    std::string month = month_of(record.published_at);
    const std::map<std::string, std::string>* mapping = nullptr;
    if (mappings) {
      auto it = mappings->find(month);
      if (it != mappings->end()) mapping = &it->second;
    }
    std::set<std::string> topics;
    for (const auto& raw : s.topics) {
      std::string label = raw;
      if (mapping) {
        auto it = mapping->find(label);
        if (it != mapping->end()) label = it->second;
      }
      topics.insert(label);
    }
    std::set<std::string> keywords(s.keywords.begin(), s.keywords.end());

    index.papers[s.paper_id] = record;
    index.topics_of[s.paper_id] = {topics.begin(), topics.end()};
    index.keywords_of[s.paper_id] = {keywords.begin(), keywords.end()};
    for (const auto& t : topics) index.papers_of[t].insert(s.paper_id);
    index.assignments_by_month[month] += static_cast<int>(topics.size());
    index.papers_by_month[month] += 1;
  }

  if (!index.papers_by_month.empty()) {
    int first = month_index_or_throw(index.papers_by_month.begin()->first);
    int last = month_index_or_throw(index.papers_by_month.rbegin()->first);
    for (int m = first; m <= last; ++m) index.months.push_back(month_from_index(m));
  }
  return index;
}

// Label occurrence counts for one month, each paper counted once per
// label it carries.
inline std::map<std::string, int> label_counts_for_month(const CorpusIndex& index,
                                                         const std::string& month) {
  std::map<std::string, int> counts;
  for (const auto& [id, topics] : index.topics_of) {
    if (index.month_of_paper(id) != month) continue;
    for (const auto& t : topics) counts[t] += 1;
  }
  return counts;
}

// --- trajectories ----------------------------------------------------------

// Sparse c_t and p_t = c_t / N_t series for one topic. Months without the
// topic are absent from the maps and read as zero through the accessors.
inline TopicTrajectory monthly_proportions(const CorpusIndex& index, const std::string& topic) {
  auto it = index.papers_of.find(topic);
  if (it == index.papers_of.end()) throw std::invalid_argument("unknown topic: " + topic);
  TopicTrajectory traj;
  traj.label = topic;
  for (const auto& id : it->second) traj.counts[index.month_of_paper(id)] += 1;
  for (const auto& [month, c] : traj.counts) {
    int n = index.assignments_by_month.at(month);
    traj.proportions[month] = static_cast<double>(c) / n;
  }
  traj.first_month = traj.counts.begin()->first;
  traj.last_month = traj.counts.rbegin()->first;
  return traj;
}

// --- lifecycle indicators --------------------------------------------------

// OLS slope over the last `window` points of the series, x = 0,1,...
// Fewer than two points, or a shorter series than the window, degrade
// gracefully rather than faulting.
inline double ols_slope(const std::vector<double>& series, int window = 6) {
  if (window < 1) throw std::invalid_argument("ols window must be >= 1");
  size_t n = std::min(series.size(), static_cast<size_t>(window));
  if (n < 2) return 0.0;
  size_t start = series.size() - n;
  double x_mean = (n - 1) / 2.0;
  double y_mean = 0.0;
  for (size_t i = 0; i < n; ++i) y_mean += series[start + i];
  y_mean /= n;
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = i - x_mean;
    num += dx * (series[start + i] - y_mean);
    den += dx * dx;
  }
  return den == 0.0 ? 0.0 : num / den;
}

// Unclassified lifecycle measurements for one topic at a given window
// end. All fields mirror LifecycleEntry plus the first-appearance month
// the classifier needs.
struct LifecycleIndicators {
  double peak_proportion = 0.0;
  std::string peak_month;
  double current_level = 0.0;
  double decline_ratio = 0.0;
  double trend_slope = 0.0;
  double recent_fraction = 0.0;
  int total_count = 0;
  int active_months = 0;
  std::string first_month;
};

// Peak, current level, decline ratio, recent slope, and recency fraction
// for a trajectory, considering only months up to window_end. Absent
// months contribute zero proportion throughout.
inline LifecycleIndicators lifecycle_indicators(const TopicTrajectory& traj,
                                                const std::string& window_end, int total_count) {
  int end = month_index_or_throw(window_end);
  LifecycleIndicators ind;
  ind.total_count = total_count;

  for (const auto& [month, c] : traj.counts) {
    if (month > window_end) break;
    if (ind.first_month.empty()) ind.first_month = month;
    ind.active_months += 1;
    double p = traj.proportions.at(month);
    if (p > ind.peak_proportion) {
      ind.peak_proportion = p;
      ind.peak_month = month;
    }
  }
  if (ind.first_month.empty()) return ind;  // no data inside the window

  double recent_level = 0.0;
  for (int m = end - 2; m <= end; ++m)
    recent_level += traj.proportion_at(month_from_index(m));
  ind.current_level = recent_level / 3.0;
  ind.decline_ratio =
      ind.peak_proportion > 0.0 ? ind.current_level / ind.peak_proportion : 0.0;

  std::vector<double> series;
  for (int m = month_index_or_throw(ind.first_month); m <= end; ++m)
    series.push_back(traj.proportion_at(month_from_index(m)));
  ind.trend_slope = ols_slope(series, 6);

  int recent_papers = 0;
  for (int m = end - 7; m <= end; ++m) recent_papers += traj.count_at(month_from_index(m));
  ind.recent_fraction = total_count > 0 ? static_cast<double>(recent_papers) / total_count : 0.0;
  return ind;
}

// First-match phase cascade. The rules overlap by design; evaluation
// order is part of the contract.
inline Phase classify_phase(const LifecycleIndicators& ind, const std::string& window_end) {
  if (ind.first_month.empty())
    throw std::invalid_argument("cannot classify a topic with no data in the window");
  int end = month_index_or_throw(window_end);
  int since_first = end - month_index_or_throw(ind.first_month);
  double delta = ind.decline_ratio;
  double beta = ind.trend_slope;

  if (since_first <= 8 || (ind.recent_fraction > 0.60 && ind.total_count < 200))
    return Phase::InnovationTrigger;
  bool peak_recent =
      !ind.peak_month.empty() && month_index_or_throw(ind.peak_month) >= end - 5;
  if ((delta > 0.70 && peak_recent) || (beta > 0.001 && delta > 0.65)) return Phase::Peak;
  if ((delta < 0.65 && beta <= 0.0003) || (beta < -0.001 && delta < 0.75)) return Phase::Trough;
  if (delta < 0.65 && beta > 0.0003) return Phase::Slope;
  return Phase::Plateau;
}

inline LifecycleEntry to_entry(const LifecycleIndicators& ind, Phase phase) {
  LifecycleEntry e;
  e.phase = phase;
  e.peak_proportion = ind.peak_proportion;
  e.peak_month = ind.peak_month;
  e.current_level = ind.current_level;
  e.decline_ratio = ind.decline_ratio;
  e.trend_slope = ind.trend_slope;
  e.recent_fraction = ind.recent_fraction;
  e.total_count = ind.total_count;
  e.active_months = ind.active_months;
  return e;
}

// Classified snapshot over all topics with at least min_papers papers in
// the window. Only admitted topics are stored in topics_by_month; the
// id is the two-month label ending the window.
inline LifecycleSnapshot build_lifecycle_snapshot(const CorpusIndex& index,
                                                  const std::string& window_end,
                                                  int min_papers = 15) {
  int end = month_index_or_throw(window_end);
  LifecycleSnapshot snap;
  snap.snapshot_id = month_from_index(end - 1) + "_" + window_end;

  for (const auto& month : index.months) {
    if (month > window_end) break;
    snap.sorted_months.push_back(month);
    auto it = index.assignments_by_month.find(month);
    snap.total_by_month[month] = it == index.assignments_by_month.end() ? 0 : it->second;
  }
  snap.n_months = static_cast<int>(snap.sorted_months.size());

  std::set<std::string> counted_papers;
  for (const auto& [topic, ids] : index.papers_of) {
    TopicTrajectory traj = monthly_proportions(index, topic);
    int total = 0;
    for (const auto& [month, c] : traj.counts)
      if (month <= window_end) total += c;
    if (total < min_papers) continue;
    LifecycleIndicators ind = lifecycle_indicators(traj, window_end, total);
    snap.lifecycle_data[topic] = to_entry(ind, classify_phase(ind, window_end));
    for (const auto& [month, c] : traj.counts)
      if (month <= window_end) snap.topics_by_month[topic][month] = c;
  }
  for (const auto& [id, record] : index.papers)
    if (month_of(record.published_at) <= window_end) counted_papers.insert(id);
  snap.n_papers = static_cast<int>(counted_papers.size());
  return snap;
}

// --- distribution statistics ----------------------------------------------

// Shannon entropy in bits over normalized frequencies. Zero-count labels
// are ignored; a distribution with no positive mass is a fault.
inline double shannon_entropy(const std::map<std::string, int>& distribution) {
  double total = 0.0;
  for (const auto& [label, c] : distribution) {
    if (c < 0) throw std::invalid_argument("negative count for label: " + label);
    total += c;
  }
  if (total == 0.0) throw std::invalid_argument("entropy of an all-zero distribution");
  double h = 0.0;
  for (const auto& [label, c] : distribution) {
    if (c == 0) continue;
    double p = c / total;
    h -= p * std::log2(p);
  }
  return h;
}

// Month of first appearance per label, tallied across the index span.
// Months where nothing debuts report zero.
inline std::map<std::string, int> new_topic_counts(const CorpusIndex& index) {
  std::map<std::string, int> counts;
  for (const auto& month : index.months) counts[month] = 0;
  for (const auto& [topic, ids] : index.papers_of) {
    std::string first;
    for (const auto& id : ids) {
      std::string m = index.month_of_paper(id);
      if (first.empty() || m < first) first = m;
    }
    counts[first] += 1;
  }
  return counts;
}

// --- co-occurrence ---------------------------------------------------------

struct CooccurrenceMatrix {
  std::vector<std::string> topics;            // by total paper count, ties lexicographic
  std::vector<std::vector<int>> counts;       // |papers(A) ∩ papers(B)|, diagonal |A|
  std::vector<std::vector<double>> jaccard;   // |∩| / |∪|, diagonal 1
};

inline CooccurrenceMatrix cooccurrence(const CorpusIndex& index, int top_k) {
  if (top_k < 0) throw std::invalid_argument("top_k must be >= 0");
  std::vector<std::pair<std::string, int>> ranked;
  for (const auto& [topic, ids] : index.papers_of)
    ranked.push_back({topic, static_cast<int>(ids.size())});
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  size_t k = std::min(ranked.size(), static_cast<size_t>(top_k));

  CooccurrenceMatrix m;
  for (size_t i = 0; i < k; ++i) m.topics.push_back(ranked[i].first);
  m.counts.assign(k, std::vector<int>(k, 0));
  m.jaccard.assign(k, std::vector<double>(k, 0.0));
  for (size_t i = 0; i < k; ++i) {
    const auto& a = index.papers_of.at(m.topics[i]);
    for (size_t j = i; j < k; ++j) {
      const auto& b = index.papers_of.at(m.topics[j]);
      int inter = 0;
      for (const auto& id : a) inter += b.count(id);
      int uni = static_cast<int>(a.size() + b.size()) - inter;
      double jac = uni == 0 ? 0.0 : static_cast<double>(inter) / uni;
      m.counts[i][j] = m.counts[j][i] = inter;
      m.jaccard[i][j] = m.jaccard[j][i] = jac;
    }
  }
  return m;
}

// --- keyword evolution -----------------------------------------------------

// Per-keyword monthly percentages within one topic's papers. Months where
// the topic has no papers are omitted from the series (a gap, not zero).
struct KeywordTrend {
  std::string keyword;
  std::map<std::string, double> percent_by_month;
};

inline std::vector<KeywordTrend> keyword_evolution(const CorpusIndex& index,
                                                   const std::string& topic, int top_m) {
  auto it = index.papers_of.find(topic);
  if (it == index.papers_of.end()) throw std::invalid_argument("unknown topic: " + topic);
  if (top_m < 0) throw std::invalid_argument("top_m must be >= 0");

  std::map<std::string, int> topic_papers_by_month;
  std::map<std::string, int> keyword_totals;
  std::map<std::string, std::map<std::string, int>> keyword_by_month;
  for (const auto& id : it->second) {
    std::string month = index.month_of_paper(id);
    topic_papers_by_month[month] += 1;
    for (const auto& kw : index.keywords_of.at(id)) {
      keyword_totals[kw] += 1;
      keyword_by_month[kw][month] += 1;
    }
  }

  std::vector<std::pair<std::string, int>> ranked(keyword_totals.begin(), keyword_totals.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  size_t m = std::min(ranked.size(), static_cast<size_t>(top_m));

  std::vector<KeywordTrend> out;
  for (size_t i = 0; i < m; ++i) {
    KeywordTrend trend;
    trend.keyword = ranked[i].first;
    const auto& monthly = keyword_by_month.at(trend.keyword);
    for (const auto& [month, papers] : topic_papers_by_month) {
      auto hit = monthly.find(month);
      int mentions = hit == monthly.end() ? 0 : hit->second;
      trend.percent_by_month[month] = 100.0 * mentions / papers;
    }
    out.push_back(std::move(trend));
  }
  return out;
}

// --- smoothing -------------------------------------------------------------

// Discrete Gaussian smoothing with edge and gap renormalization. Gaps
// stay gaps; present points become a convex combination of the present
// points within the kernel radius (clamped to the window's value range,
// which keeps constant series bit-exact).
inline std::vector<std::optional<double>> gaussian_smooth(
    const std::vector<std::optional<double>>& series, double sigma = 0.8) {
  if (sigma <= 0.0) throw std::invalid_argument("sigma must be > 0");
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> weight(radius + 1);
  for (int d = 0; d <= radius; ++d) weight[d] = std::exp(-(d * d) / (2.0 * sigma * sigma));

  std::vector<std::optional<double>> out(series.size());
  int n = static_cast<int>(series.size());
  for (int i = 0; i < n; ++i) {
    if (!series[i]) continue;
    double sum = 0.0, norm = 0.0;
    double lo = *series[i], hi = *series[i];
    for (int d = -radius; d <= radius; ++d) {
      int j = i + d;
      if (j < 0 || j >= n || !series[j]) continue;
      double w = weight[std::abs(d)];
      sum += w * *series[j];
      norm += w;
      lo = std::min(lo, *series[j]);
      hi = std::max(hi, *series[j]);
    }
    out[i] = std::clamp(sum / norm, lo, hi);
  }
  return out;
}

inline std::vector<double> gaussian_smooth(const std::vector<double>& series,
                                           double sigma = 0.8) {
  std::vector<std::optional<double>> boxed(series.begin(), series.end());
  auto smoothed = gaussian_smooth(boxed, sigma);
  std::vector<double> out;
  out.reserve(series.size());
  for (const auto& v : smoothed) out.push_back(*v);
  return out;
}

// --- velocity --------------------------------------------------------------

struct TopicVelocity {
  int time_to_peak = 0;               // months from first appearance to peak
  std::optional<int> half_life;       // months from peak to half of peak
  bool censored = false;              // no half-decay inside the data window
};

// Callers apply this before computing velocity; the measures themselves
// are defined for any non-empty trajectory.
inline bool velocity_eligible(int total_count, int active_months) {
  return total_count >= 15 && active_months >= 4;
}

inline TopicVelocity topic_velocity(const TopicTrajectory& traj) {
  if (traj.counts.empty()) throw std::invalid_argument("velocity of an empty trajectory");
  double peak = 0.0;
  std::string peak_month;
  for (const auto& [month, p] : traj.proportions) {
    if (p > peak) {
      peak = p;
      peak_month = month;
    }
  }
  TopicVelocity v;
  v.time_to_peak = months_between(traj.first_month, peak_month);
  int peak_idx = month_index_or_throw(peak_month);
  int last_idx = month_index_or_throw(traj.last_month);
  for (int delta = 1; peak_idx + delta <= last_idx; ++delta) {
    if (traj.proportion_at(month_from_index(peak_idx + delta)) <= 0.5 * peak) {
      v.half_life = delta;
      return v;
    }
  }
  v.censored = true;
  return v;
}

// --- novelty ---------------------------------------------------------------

struct NoveltyConfig {
  double alpha = 0.5;  // pseudo-count substituted for zero joint counts
  int min_topics = 2;
};

// Negated mean pairwise PMI of a paper's topics against the corpus.
// Computed as log2(joint*N / (cA*cB)) so integer-ratio cases stay exact;
// only a zero joint count is replaced by alpha. Papers with fewer than
// min_topics distinct topics have no defined score.
inline std::optional<double> novelty_score(const std::vector<std::string>& topics,
                                           const CorpusIndex& index,
                                           const NoveltyConfig& config = {}) {
  if (config.alpha <= 0.0) throw std::invalid_argument("alpha must be > 0");
  std::vector<std::string> distinct;
  for (const auto& t : topics)
    if (std::find(distinct.begin(), distinct.end(), t) == distinct.end())
      distinct.push_back(t);
  if (static_cast<int>(distinct.size()) < config.min_topics) return std::nullopt;
  for (const auto& t : distinct)
    if (!index.papers_of.count(t)) throw std::invalid_argument("topic absent from index: " + t);

  double n = index.total_papers();
  double pmi_sum = 0.0;
  int pairs = 0;
  for (size_t i = 0; i < distinct.size(); ++i) {
    const auto& a = index.papers_of.at(distinct[i]);
    for (size_t j = i + 1; j < distinct.size(); ++j) {
      const auto& b = index.papers_of.at(distinct[j]);
      int joint = 0;
      for (const auto& id : a) joint += b.count(id);
      double joint_mass = joint > 0 ? joint : config.alpha;
      pmi_sum += std::log2(joint_mass * n / (static_cast<double>(a.size()) * b.size()));
      ++pairs;
    }
  }
  return -pmi_sum / pairs;
}

// --- engagement ------------------------------------------------------------

struct EngagementStats {
  double median = 0.0;
  double p90 = 0.0;
  int max = 0;
  double mean = 0.0;
  double skewness = 0.0;
  int count = 0;
};

namespace detail {

template <typename T>
inline T nearest_rank(const std::vector<T>& sorted, double q) {
  size_t rank = static_cast<size_t>(std::ceil(q * sorted.size()));
  if (rank < 1) rank = 1;
  if (rank > sorted.size()) rank = sorted.size();
  return sorted[rank - 1];
}

}  // namespace detail

inline EngagementStats engagement_stats(const std::vector<int>& upvotes) {
  if (upvotes.empty()) throw std::invalid_argument("engagement stats of an empty list");
  std::vector<int> sorted = upvotes;
  std::sort(sorted.begin(), sorted.end());

  EngagementStats s;
  s.count = static_cast<int>(sorted.size());
  s.median = detail::nearest_rank(sorted, 0.5);
  s.p90 = detail::nearest_rank(sorted, 0.9);
  s.max = sorted.back();
  double mean = 0.0;
  for (int v : sorted) mean += v;
  mean /= sorted.size();
  s.mean = mean;
  double m2 = 0.0, m3 = 0.0;
  for (int v : sorted) {
    double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= sorted.size();
  m3 /= sorted.size();
  s.skewness = m2 == 0.0 ? 0.0 : m3 / std::pow(m2, 1.5);
  return s;
}

struct DayRateSplit {
  double weekday_mean = 0.0;
  double weekend_mean = 0.0;
  int weekday_days = 0;
  int weekend_days = 0;
};

// Papers per calendar day, split weekday versus weekend over an explicit
// UTC date span. Zero-paper days count toward the day totals.
inline DayRateSplit weekday_weekend_means(const std::vector<PaperRecord>& records,
                                          const std::string& from, const std::string& to) {
  auto lo = parse_date(from), hi = parse_date(to);
  if (!lo || !hi) throw std::invalid_argument("bad day span bounds: " + from + ".." + to);
  Date a = *lo, b = *hi;
  if (b < a) throw std::invalid_argument("empty day span: " + from + " > " + to);
  std::map<std::string, int> per_day;
  for (const auto& r : records)
    if (r.published_at >= from && r.published_at <= to) per_day[r.published_at] += 1;

  DayRateSplit split;
  int weekday_papers = 0, weekend_papers = 0;
  for (Date d = a;; d = next_day(d)) {
    std::string iso = format_date(d);
    auto it = per_day.find(iso);
    int papers = it == per_day.end() ? 0 : it->second;
    if (is_weekend(d)) {
      split.weekend_days += 1;
      weekend_papers += papers;
    } else {
      split.weekday_days += 1;
      weekday_papers += papers;
    }
    if (!(d < b)) break;
  }
  if (split.weekday_days > 0)
    split.weekday_mean = static_cast<double>(weekday_papers) / split.weekday_days;
  if (split.weekend_days > 0)
    split.weekend_mean = static_cast<double>(weekend_papers) / split.weekend_days;
  return split;
}

// Span-deriving convenience: covers min..max published date.
inline DayRateSplit weekday_weekend_means(const std::vector<PaperRecord>& records) {
  if (records.empty()) throw std::invalid_argument("no records, empty day span");
  std::string lo = records.front().published_at, hi = lo;
  for (const auto& r : records) {
    lo = std::min(lo, r.published_at);
    hi = std::max(hi, r.published_at);
  }
  return weekday_weekend_means(records, lo, hi);
}

// Per-topic engagement medians and their median, kept distinct from the
// overall per-paper median (the two answer different questions).
inline std::map<std::string, double> topic_median_upvotes(const CorpusIndex& index) {
  std::map<std::string, double> medians;
  for (const auto& [topic, ids] : index.papers_of) {
    std::vector<int> votes;
    for (const auto& id : ids) votes.push_back(index.papers.at(id).upvotes);
    std::sort(votes.begin(), votes.end());
    medians[topic] = detail::nearest_rank(votes, 0.5);
  }
  return medians;
}

inline std::optional<double> median_of_topic_medians(const CorpusIndex& index) {
  auto medians = topic_median_upvotes(index);
  if (medians.empty()) return std::nullopt;
  std::vector<double> values;
  for (const auto& [topic, m] : medians) values.push_back(m);
  std::sort(values.begin(), values.end());
  return detail::nearest_rank(values, 0.5);
}

}  // namespace paperbrew
