#include <paperbrew/paperbrew.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "synthetic.hpp"
#include "testutil.hpp"

// Standalone acceptance gate: every criterion runs inside a wall-clock
// budget and prints exactly one PASS/FAIL/SKIP line. The two criteria
// that need the released dataset snapshot skip unless
// PAPERBREW_SNAPSHOT_DIR points at a store-layout copy of it.

using namespace paperbrew;

namespace {

struct Checker {
  std::vector<std::string> failures;

  void expect(bool cond, const std::string& what) {
    if (!cond) failures.push_back(what);
  }
  void expect_near(double actual, double expected, double tol, const std::string& what) {
    if (!(std::abs(actual - expected) <= tol))
      failures.push_back(what + ": got " + format_double(actual) + ", want " +
                         format_double(expected) + " within " + format_double(tol));
  }
  void expect_exact(double actual, double expected, const std::string& what) {
    if (actual != expected)
      failures.push_back(what + ": got " + format_double(actual) + ", want exactly " +
                         format_double(expected));
  }
};

// A body returns a skip reason, or nullopt when it ran.
struct Criterion {
  int number;
  std::string name;
  double budget_seconds;
  std::function<std::optional<std::string>(Checker&)> body;
};

TopicTrajectory fixture_traj(const std::string& start_month, const std::vector<int>& counts,
                             int assignments_per_month) {
  TopicTrajectory traj;
  traj.label = "fixture";
  for (size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] == 0) continue;
    std::string month = add_months(start_month, static_cast<int>(i));
    traj.counts[month] = counts[i];
    traj.proportions[month] = static_cast<double>(counts[i]) / assignments_per_month;
  }
  traj.first_month = traj.counts.begin()->first;
  traj.last_month = traj.counts.rbegin()->first;
  return traj;
}

int trajectory_total(const TopicTrajectory& traj) {
  int total = 0;
  for (const auto& [month, c] : traj.counts) total += c;
  return total;
}

CorpusIndex single_topic_index(const std::vector<std::vector<std::string>>& topic_sets) {
  std::vector<PaperRecord> records;
  std::vector<StructuredSummary> summaries;
  for (size_t i = 0; i < topic_sets.size(); ++i) {
    char id[24];
    std::snprintf(id, sizeof(id), "2501.%05d", static_cast<int>(i) + 1);
    records.push_back(testutil::make_record(id, "2025-01-10"));
    summaries.push_back(testutil::make_summary(id, topic_sets[i]));
  }
  return build_index(summaries, records);
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr) {
  std::ostringstream out, err;
  int code = cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  return code;
}

double nearest_rank_median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  size_t rank = (values.size() + 1) / 2;
  return values[rank - 1];
}

// --- criterion bodies ------------------------------------------------------

std::optional<std::string> formula_unit_suite(Checker& check) {
  std::map<std::string, int> uniform;
  for (int i = 0; i < 16; ++i) uniform["label" + std::to_string(i)] = 1;
  check.expect_near(shannon_entropy(uniform), 4.0, 1e-12, "uniform 16-label entropy");
  check.expect_near(shannon_entropy({{"a", 3}, {"b", 1}}), 0.811278, 1e-6,
                    "entropy of counts {3,1}");
  check.expect_near(ols_slope({0.1, 0.2, 0.3}), 0.1, 1e-12, "slope of a linear series");

  // Topic A on papers {1,2,3}, topic B on {2,3,4}: intersection 2 of
  // union 4.
  auto jaccard_index = single_topic_index({{"A"}, {"A", "B"}, {"A", "B"}, {"B"}});
  auto matrix = cooccurrence(jaccard_index, 2);
  check.expect(matrix.topics == std::vector<std::string>{"A", "B"},
               "co-occurrence ranking of the jaccard fixture");
  check.expect(matrix.counts[0][1] == 2, "joint count of the jaccard fixture");
  check.expect_exact(matrix.jaccard[0][1], 0.5, "jaccard of {1,2,3} vs {2,3,4}");

  // 100 papers, topics A and B on 10 each, never together: smoothed PMI
  // is exactly -1, so the novelty score is exactly +1.
  std::vector<std::vector<std::string>> sets;
  for (int i = 0; i < 100; ++i)
    sets.push_back({i < 10 ? "A" : i < 20 ? "B" : "C"});
  auto pmi_index = single_topic_index(sets);
  auto score = novelty_score({"A", "B"}, pmi_index);
  check.expect(score.has_value(), "novelty of a never-co-occurring pair is defined");
  if (score) check.expect_exact(*score, 1.0, "novelty of a never-co-occurring pair");
  return std::nullopt;
}

std::optional<std::string> oracle_equivalence(Checker& check) {
  auto corpus = synthetic::make_corpus(42, 300);
  auto index = build_index(corpus.summaries, corpus.records);

  auto matrix = cooccurrence(index, static_cast<int>(index.papers_of.size()));
  for (size_t i = 0; i < matrix.topics.size(); ++i) {
    check.expect(matrix.counts[i][i] == oracle::count_with_topic(corpus.flat, matrix.topics[i]),
                 "diagonal count for " + matrix.topics[i]);
    for (size_t j = i + 1; j < matrix.topics.size(); ++j) {
      check.expect(matrix.counts[i][j] == oracle::count_with_both(corpus.flat, matrix.topics[i],
                                                                  matrix.topics[j]),
                   "joint count for " + matrix.topics[i] + " / " + matrix.topics[j]);
      check.expect_near(matrix.jaccard[i][j],
                        oracle::jaccard(corpus.flat, matrix.topics[i], matrix.topics[j]), 1e-12,
                        "jaccard for " + matrix.topics[i] + " / " + matrix.topics[j]);
    }
  }

  for (const auto& paper : corpus.flat) {
    auto got = novelty_score(index.topics_of.at(paper.id), index);
    auto want = oracle::novelty(corpus.flat, paper.topics);
    check.expect(got.has_value() == want.has_value(), "novelty defined-ness for " + paper.id);
    if (got && want)
      check.expect_near(*got, *want, 1e-12, "novelty score for " + paper.id);
  }

  auto debuts = new_topic_counts(index);
  auto expected_debuts = oracle::new_topic_counts(corpus.flat);
  for (const auto& [month, count] : debuts) {
    auto it = expected_debuts.find(month);
    int want = it == expected_debuts.end() ? 0 : it->second;
    check.expect(count == want, "new-topic count for " + month);
  }

  for (const auto& entry : index.papers_of) {
    auto traj = monthly_proportions(index, entry.first);
    auto expected = oracle::monthly_proportions(corpus.flat, entry.first);
    check.expect(traj.proportions.size() == expected.size(),
                 "proportion month coverage for " + entry.first);
    for (const auto& [month, p] : expected)
      check.expect_near(traj.proportions.at(month), p, 1e-12,
                        "proportion for " + entry.first + " in " + month);
  }
  return std::nullopt;
}

std::optional<std::string> lifecycle_cascade_coverage(Checker& check) {
  auto classify = [&](const TopicTrajectory& traj, const std::string& window_end) {
    auto ind = lifecycle_indicators(traj, window_end, trajectory_total(traj));
    return std::pair<LifecycleIndicators, Phase>{ind, classify_phase(ind, window_end)};
  };

  // (a) first seen five months before the window end.
  auto young = fixture_traj("2025-07", {5, 5, 5, 5, 5, 5}, 100);
  check.expect(classify(young, "2025-12").second == Phase::InnovationTrigger,
               "young topic phase");

  // (b) decline ratio 0.80 with the peak one month back.
  auto peaked = fixture_traj("2025-01", {20, 20, 20, 20, 10, 10, 10, 10, 5, 30, 50, 40}, 100);
  auto [peaked_ind, peaked_phase] = classify(peaked, "2025-12");
  check.expect_near(peaked_ind.decline_ratio, 0.80, 1e-9, "decline ratio of (b)");
  check.expect(peaked_ind.peak_month == "2025-11", "peak month of (b)");
  check.expect(peaked_phase == Phase::Peak, "phase of (b)");

  // (c) decline ratio 0.40 with a flat recent slope.
  auto stalled = fixture_traj("2025-01", {20, 25, 15, 12, 10, 10, 10, 10, 10, 10, 10, 10}, 100);
  auto [stalled_ind, stalled_phase] = classify(stalled, "2025-12");
  check.expect_near(stalled_ind.decline_ratio, 0.40, 1e-9, "decline ratio of (c)");
  check.expect_exact(stalled_ind.trend_slope, 0.0, "trend slope of (c)");
  check.expect(stalled_phase == Phase::Trough, "phase of (c)");

  // (d) decline ratio 0.40 with a clear positive recent slope.
  auto recovering =
      fixture_traj("2025-01", {200, 255, 150, 120, 100, 100, 94, 96, 98, 100, 102, 104}, 1000);
  auto [recovering_ind, recovering_phase] = classify(recovering, "2025-12");
  check.expect_near(recovering_ind.decline_ratio, 0.40, 1e-9, "decline ratio of (d)");
  check.expect_near(recovering_ind.trend_slope, 0.002, 1e-9, "trend slope of (d)");
  check.expect(recovering_phase == Phase::Slope, "phase of (d)");

  // (e) decline ratio 0.70, flat slope, peak twelve months back.
  auto settled =
      fixture_traj("2025-01", {20, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14, 14}, 100);
  auto [settled_ind, settled_phase] = classify(settled, "2026-01");
  check.expect_near(settled_ind.decline_ratio, 0.70, 1e-9, "decline ratio of (e)");
  check.expect(settled_ind.peak_month == "2025-01", "peak month of (e)");
  check.expect(settled_phase == Phase::Plateau, "phase of (e)");
  return std::nullopt;
}

std::optional<std::string> velocity_measures(Checker& check) {
  auto spiky = fixture_traj("2025-01", {1, 3, 1}, 10);
  auto v = topic_velocity(spiky);
  check.expect(v.time_to_peak == 1, "time to peak of a spike");
  check.expect(v.half_life.has_value() && *v.half_life == 1, "half-life of a spike");
  check.expect(!v.censored, "spike half-life is observed");

  auto rising = fixture_traj("2025-01", {1, 2, 3}, 10);
  auto r = topic_velocity(rising);
  check.expect(r.time_to_peak == 2, "time to peak of a rising topic");
  check.expect(!r.half_life.has_value(), "rising topic has no half-life");
  check.expect(r.censored, "rising topic half-life is censored");
  return std::nullopt;
}

std::optional<std::string> summarize_idempotency(Checker& check) {
  testutil::TempDir dir;
  std::string dd = dir.path().string();
  std::string out;

  int ingest_code = run_cli({"--data-dir", dd, "--fixtures-dir", PAPERBREW_FIXTURES_DIR,
                             "ingest", "--from", "2025-03-03", "--to", "2025-03-04"},
                            &out);
  check.expect(ingest_code == 0, "ingest exits cleanly");

  int first_code =
      run_cli({"--data-dir", dd, "summarize", "--from", "2025-03-03", "--to", "2025-03-04"},
              &out);
  check.expect(first_code == 0, "first summarize exits cleanly");
  auto first_batch = json::parse(out, nullptr, false);
  check.expect(!first_batch.is_discarded() && first_batch["succeeded"] == 20,
               "first summarize succeeds on all 20 papers");
  auto before = testutil::snapshot_tree(dir.path(), {"oplog.jsonl"});
  check.expect(!before.empty(), "data directory has content after the first run");

  int second_code =
      run_cli({"--data-dir", dd, "summarize", "--from", "2025-03-03", "--to", "2025-03-04"},
              &out);
  check.expect(second_code == 0, "second summarize exits cleanly");
  auto second_batch = json::parse(out, nullptr, false);
  check.expect(!second_batch.is_discarded() && second_batch["succeeded"] == 0,
               "second summarize succeeds on nothing");
  check.expect(!second_batch.is_discarded() && second_batch["skipped_cached"] == 20,
               "second summarize skips all 20 via the cache");
  auto after = testutil::snapshot_tree(dir.path(), {"oplog.jsonl"});
  check.expect(before == after, "data directory is byte-identical after the rerun");
  return std::nullopt;
}

std::optional<std::string> consolidation_partition_fuzz(Checker& check) {
  std::mt19937 rng(2024);
  const std::vector<std::string> roots = {
      "transformers", "diffusion",  "agents",    "retrieval", "alignment",
      "speech",       "robotics",   "vision",    "reasoning", "quantization",
      "multimodal",   "evaluation", "code",      "video",     "distillation",
      "safety",       "planning",   "compilers", "graphs",    "benchmarks"};
  auto mixed_case = [&](std::string s) {
    for (auto& c : s)
      if (rng() % 2 == 0) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
  };

  for (int trial = 0; trial < 1000 && check.failures.size() < 5; ++trial) {
    LabelInventory inv;
    inv.month = "2025-06";
    int n_labels = 1 + static_cast<int>(rng() % 500);
    for (int i = 0; i < n_labels; ++i) {
      std::string label = mixed_case(roots[rng() % roots.size()]);
      if (rng() % 3 == 0) label += " " + std::to_string(rng() % 40);
      inv.counts[label] += 1 + static_cast<int>(rng() % 50);
    }

    WarningLog warnings;
    auto report = consolidate_month(inv, nullptr, warnings);
    std::string tag = " (trial " + std::to_string(trial) + ")";

    std::map<std::string, int> seen;
    long cluster_total = 0;
    check.expect(report.top_topics.size() == report.topic_mapping.size(),
                 "ranking and mapping agree on cluster count" + tag);
    for (const auto& [cluster, count] : report.top_topics) {
      auto members = report.topic_mapping.find(cluster);
      if (members == report.topic_mapping.end()) {
        check.expect(false, "ranked cluster missing from the mapping" + tag);
        continue;
      }
      long member_total = 0;
      for (const auto& m : members->second) {
        seen[m] += 1;
        auto it = inv.counts.find(m);
        member_total += it == inv.counts.end() ? 0 : it->second;
      }
      check.expect(member_total == count, "cluster count conserves member counts" + tag);
      cluster_total += count;
    }
    check.expect(seen.size() == inv.counts.size(), "every label is assigned" + tag);
    for (const auto& [label, times] : seen)
      if (times != 1) check.expect(false, "label assigned " + std::to_string(times) +
                                              " times: " + label + tag);
    long inventory_total = 0;
    for (const auto& [label, c] : inv.counts) inventory_total += c;
    check.expect(cluster_total == inventory_total, "total count is conserved" + tag);
    check.expect(warnings.empty(), "fallback consolidation emits no warnings" + tag);
  }
  return std::nullopt;
}

std::optional<std::string> report_determinism(Checker& check) {
  std::vector<PaperRecord> records;
  std::vector<StructuredSummary> summaries;
  auto add = [&](const char* id, const char* date, std::vector<std::string> topics,
                 int upvotes) {
    records.push_back(testutil::make_record(id, date, upvotes));
    summaries.push_back(testutil::make_summary(id, std::move(topics)));
  };
  add("2501.00001", "2025-01-05", {"Agents", "Retrieval"}, 12);
  add("2501.00002", "2025-01-09", {"agents"}, 3);
  add("2502.00001", "2025-02-11", {"Diffusion", "Video"}, 20);
  add("2502.00002", "2025-02-12", {"Diffusion"}, 7);
  add("2503.00001", "2025-03-03", {"Agents", "Diffusion"}, 9);
  add("2503.00002", "2025-03-03", {"Retrieval"}, 1);

  LabelInventory inv;
  inv.month = "2025-03";
  for (const auto& s : summaries)
    if (s.paper_id.rfind("2503.", 0) == 0)
      for (const auto& t : s.topics) inv.counts[t] += 1;

  auto render_all = [&](Store& store) {
    WarningLog warnings;
    std::vector<PaperRecord> march;
    std::vector<StructuredSummary> march_summaries;
    for (const auto& r : records)
      if (month_of(r.published_at) == "2025-03") march.push_back(r);
    for (const auto& s : summaries)
      if (s.paper_id.rfind("2503.", 0) == 0) march_summaries.push_back(s);

    render_daily("2025-03-03", march, march_summaries, store);
    auto consolidation = consolidate_month(inv, nullptr, warnings);
    render_monthly("2025-03", march, march_summaries, consolidation, store);
    auto index = build_index(summaries, records);
    auto snap = build_lifecycle_snapshot(index, "2025-03", 1);
    render_lifecycle(snap, store);
  };

  testutil::TempDir dir_a, dir_b;
  Store store_a(dir_a.path()), store_b(dir_b.path());
  render_all(store_a);
  render_all(store_b);
  auto tree_a = testutil::snapshot_tree(dir_a.path());
  auto tree_b = testutil::snapshot_tree(dir_b.path());
  check.expect(!tree_a.empty(), "rendering produced files");
  check.expect(tree_a == tree_b, "renders into fresh directories are byte-identical");
  return std::nullopt;
}

std::optional<std::string> snapshot_dir() {
  const char* env = std::getenv("PAPERBREW_SNAPSHOT_DIR");
  if (env == nullptr || *env == '\0')
    return "PAPERBREW_SNAPSHOT_DIR not set; needs the released dataset snapshot";
  return std::nullopt;
}

std::optional<std::string> engagement_snapshot(Checker& check) {
  if (auto skip = snapshot_dir()) return skip;
  Store store(std::getenv("PAPERBREW_SNAPSHOT_DIR"));
  auto records = store.read_papers("0000-01-01", "9999-12-31");
  if (records.empty()) return std::string("snapshot directory holds no papers");

  std::vector<int> upvotes;
  for (const auto& r : records) upvotes.push_back(r.upvotes);
  auto stats = engagement_stats(upvotes);
  check.expect_exact(stats.median, 13.0, "median upvotes");
  check.expect_exact(stats.p90, 52.0, "90th percentile upvotes");
  check.expect(stats.max == 664, "maximum upvotes");
  check.expect_near(stats.skewness, 5.28, 0.05, "upvote skewness");

  auto split = weekday_weekend_means(records);
  check.expect_near(split.weekday_mean, 18.8, 0.1, "weekday papers per day");
  check.expect_near(split.weekend_mean, 3.3, 0.1, "weekend papers per day");
  return std::nullopt;
}

std::optional<std::string> novelty_effect_snapshot(Checker& check) {
  if (auto skip = snapshot_dir()) return skip;
  Store store(std::getenv("PAPERBREW_SNAPSHOT_DIR"));
  auto records = store.read_papers("0000-01-01", "9999-12-31");
  auto summaries = store.read_summaries("0000-01-01", "9999-12-31");
  if (records.empty() || summaries.empty())
    return std::string("snapshot directory holds no summarized corpus");
  auto index = build_index(summaries, records);

  struct Scored {
    double score;
    int upvotes;
  };
  std::vector<Scored> scored;
  for (const auto& [id, topics] : index.topics_of)
    if (auto s = novelty_score(topics, index))
      scored.push_back({*s, index.papers.at(id).upvotes});
  check.expect(scored.size() >= 10, "enough scored papers for deciles");
  if (scored.size() >= 10) {
    std::sort(scored.begin(), scored.end(),
              [](const Scored& a, const Scored& b) { return a.score > b.score; });
    size_t decile = scored.size() / 10;
    std::vector<int> top, bottom;
    for (size_t i = 0; i < decile; ++i) {
      top.push_back(scored[i].upvotes);
      bottom.push_back(scored[scored.size() - 1 - i].upvotes);
    }
    double ratio = engagement_stats(top).median /
                   std::max(1.0, engagement_stats(bottom).median);
    check.expect_near(ratio, 2.0, 0.3, "novelty decile median-upvote ratio");
  }

  std::vector<double> peaks, half_lives;
  for (const auto& entry : index.papers_of) {
    auto traj = monthly_proportions(index, entry.first);
    int total = trajectory_total(traj);
    int active = static_cast<int>(traj.counts.size());
    if (!velocity_eligible(total, active)) continue;
    auto v = topic_velocity(traj);
    peaks.push_back(v.time_to_peak);
    if (v.half_life) half_lives.push_back(*v.half_life);
  }
  check.expect(!peaks.empty() && !half_lives.empty(), "eligible topics exist");
  if (!peaks.empty()) check.expect_exact(nearest_rank_median(peaks), 8.0, "median time to peak");
  if (!half_lives.empty())
    check.expect_exact(nearest_rank_median(half_lives), 1.0, "median uncensored half-life");

  double entropy_sum = 0.0;
  int entropy_months = 0;
  for (const auto& month : index.months) {
    auto counts = label_counts_for_month(index, month);
    if (counts.empty()) continue;
    entropy_sum += shannon_entropy(counts);
    entropy_months += 1;
  }
  check.expect(entropy_months > 0, "months with assignments exist");
  if (entropy_months > 0)
    check.expect_near(entropy_sum / entropy_months, 7.9, 0.7, "mean monthly entropy");
  return std::nullopt;
}

}  // namespace

int main() {
  unsetenv("PAPERBREW_PROVIDER");
  unsetenv("PAPERBREW_DATA_DIR");

  std::vector<Criterion> criteria = {
      {1, "formula-unit-suite", 1.0, formula_unit_suite},
      {2, "oracle-equivalence", 10.0, oracle_equivalence},
      {3, "lifecycle-cascade-coverage", 1.0, lifecycle_cascade_coverage},
      {4, "velocity-measures", 1.0, velocity_measures},
      {5, "summarize-idempotency", 5.0, summarize_idempotency},
      {6, "consolidation-partition-fuzz", 10.0, consolidation_partition_fuzz},
      {7, "report-determinism", 5.0, report_determinism},
      {8, "engagement-snapshot", 60.0, engagement_snapshot},
      {9, "novelty-effect-snapshot", 120.0, novelty_effect_snapshot},
  };

  bool any_failed = false;
  for (auto& criterion : criteria) {
    Checker check;
    std::optional<std::string> skip;
    auto start = std::chrono::steady_clock::now();
    try {
      skip = criterion.body(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("unhandled fault: ") + e.what());
    }
    double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    char timing[64];
    std::snprintf(timing, sizeof(timing), "%.2fs of %.0fs", elapsed, criterion.budget_seconds);
    if (skip) {
      std::printf("SKIP  criterion %d  %-32s %s\n", criterion.number, criterion.name.c_str(),
                  skip->c_str());
      continue;
    }
    if (elapsed > criterion.budget_seconds)
      check.failures.push_back(std::string("over budget: ") + timing);

    if (check.failures.empty()) {
      std::printf("PASS  criterion %d  %-32s [%s]\n", criterion.number, criterion.name.c_str(),
                  timing);
    } else {
      any_failed = true;
      std::printf("FAIL  criterion %d  %-32s [%s]\n", criterion.number, criterion.name.c_str(),
                  timing);
      for (const auto& f : check.failures) std::printf("        - %s\n", f.c_str());
    }
  }
  return any_failed ? 1 : 0;
}
