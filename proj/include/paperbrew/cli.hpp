#pragma once

#include <ctime>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "paperbrew/analytics.hpp"
#include "paperbrew/config.hpp"
#include "paperbrew/consolidate.hpp"
#include "paperbrew/datamodel.hpp"
#include "paperbrew/ingest.hpp"
#include "paperbrew/ingest_http.hpp"
#include "paperbrew/provider.hpp"
#include "paperbrew/provider_http.hpp"
#include "paperbrew/report.hpp"
#include "paperbrew/store.hpp"
#include "paperbrew/summarize.hpp"

// Operator entry point: subcommand dispatch, configuration resolution,
// and pipeline wiring. run() is stream-parameterized so the whole CLI is
// testable in-process. Exit codes: 0 success, 1 partial (dead-lettered
// items), 2 fault.

namespace paperbrew::cli {

namespace detail {

inline std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v == nullptr ? fallback : std::string(v);
}

// The config file location may itself depend on --data-dir, so both are
// scanned from the raw arguments before real parsing.
inline std::string scan_flag(const std::vector<std::string>& args, const std::string& flag) {
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
    if (starts_with(args[i], flag + "=")) return args[i].substr(flag.size() + 1);
  }
  return {};
}

inline std::unique_ptr<Provider> make_provider(const Config& cfg, const std::string& kind) {
  if (kind == "none") return nullptr;
  if (kind == "mock") return std::make_unique<MockProvider>();
  if (kind == "fixture") {
    if (cfg.fixtures_dir.empty())
      throw std::invalid_argument("provider=fixture requires --fixtures-dir");
    return std::make_unique<ReplayProvider>(cfg.fixtures_dir);
  }
  if (kind == "live") {
    if (cfg.provider_key.empty())
      throw std::invalid_argument(
          "provider=live requires a credential (--provider-key or PAPERBREW_PROVIDER_KEY)");
    if (cfg.provider_url.empty())
      throw std::invalid_argument("provider=live requires --provider-url");
    return std::make_unique<LiveProvider>(cfg.provider_url, cfg.provider_model,
                                          cfg.provider_key);
  }
  throw std::invalid_argument("unknown provider kind: " + kind);
}

// Narrative and clustering requests only go to a real or replayed model;
// the mock provider exists for summary extraction tests and would answer
// these prompts with nonsense.
inline bool narrative_capable(const std::string& kind) {
  return kind == "fixture" || kind == "live";
}

inline std::unique_ptr<FeedSource> make_feed(const Config& cfg) {
  if (!cfg.fixtures_dir.empty()) return std::make_unique<FixtureFeedSource>(cfg.fixtures_dir);
  if (!cfg.feed_url.empty())
    return std::make_unique<HttpFeedSource>(cfg.feed_url, cfg.feed_token);
  throw std::invalid_argument("no feed configured: set --fixtures-dir or --feed-url");
}

inline void require_date(const std::string& date, const std::string& flag) {
  if (!is_valid_date(date)) throw std::invalid_argument("invalid date for " + flag + ": " + date);
}

inline void require_range(const std::string& from, const std::string& to) {
  require_date(from, "--from");
  require_date(to, "--to");
  if (to < from) throw std::invalid_argument("inverted range: " + from + " > " + to);
}

inline std::vector<std::string> dates_in_range(const std::string& from, const std::string& to) {
  std::vector<std::string> out;
  Date end = *parse_date(to);
  for (Date d = *parse_date(from);; d = next_day(d)) {
    out.push_back(format_date(d));
    if (!(d < end)) break;
  }
  return out;
}

inline std::string sanitize_filename(const std::string& label) {
  std::string out;
  for (char c : to_lower(label)) {
    if (std::isalnum(static_cast<unsigned char>(c)))
      out += c;
    else if (!out.empty() && out.back() != '_')
      out += '_';
  }
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "topic" : out;
}

inline AliasTable load_aliases(const Config& cfg) {
  return cfg.alias_table.empty() ? AliasTable{} : AliasTable::load(cfg.alias_table);
}

// Month labels covered by a set of records, sorted ascending.
inline std::vector<std::string> months_covered(const std::vector<PaperRecord>& records) {
  std::set<std::string> months;
  for (const auto& r : records) months.insert(month_of(r.published_at));
  return {months.begin(), months.end()};
}

constexpr const char* kEpochStart = "0000-01-01";
constexpr const char* kEpochEnd = "9999-12-31";

// --- subcommand bodies -----------------------------------------------------

inline int cmd_ingest(const Config& cfg, Store& store, WarningLog& warnings,
                      const std::string& date, const std::string& from, const std::string& to,
                      std::ostream& out) {
  std::vector<std::string> dates;
  if (!date.empty()) {
    require_date(date, "--date");
    dates.push_back(date);
  } else if (!from.empty() || !to.empty()) {
    require_range(from, to);
    dates = dates_in_range(from, to);
  } else {
    throw std::invalid_argument("ingest requires --date or --from/--to");
  }

  auto feed = make_feed(cfg);
  for (const auto& d : dates) {
    auto entries = fetch_daily(*feed, d, warnings);
    std::vector<json> records;
    for (const auto& e : entries)
      if (auto r = normalize(e, warnings)) records.push_back(json(*r));
    if (!records.empty()) store.write_partition("papers", d, records);
    out << d << ": " << records.size() << " papers\n";
  }
  return 0;
}

inline int cmd_summarize(const Config& cfg, Store& store, WarningLog& warnings,
                         const std::string& from, const std::string& to,
                         const std::string& provider_override, std::ostream& out) {
  require_range(from, to);
  std::string kind = provider_override.empty() ? cfg.provider : provider_override;
  if (!valid_provider_kind(kind)) throw std::invalid_argument("unknown provider kind: " + kind);
  auto provider = make_provider(cfg, kind);
  if (!provider) throw std::invalid_argument("summarize needs a provider; kind is 'none'");

  auto records = store.read_papers(from, to);
  SummarizeOptions opts;
  opts.concurrency = cfg.concurrency;
  BatchReport batch = summarize_batch(records, *provider, store, warnings, opts);
  write_dead_letters(store, records, batch.dead_letters);
  out << json(batch).dump() << "\n";
  return batch.failed > 0 ? 1 : 0;
}

inline int cmd_daily(const Config& cfg, Store& store, WarningLog& warnings,
                     const std::string& date, std::ostream& out) {
  require_date(date, "--date");
  auto records = store.read_papers(date, date);
  auto summaries = store.read_summaries(date, date);
  std::unique_ptr<Provider> narrator;
  if (narrative_capable(cfg.provider)) narrator = make_provider(cfg, cfg.provider);
  DailyTrendReport report =
      render_daily(date, records, summaries, store, narrator.get(), &warnings);
  store.write_partition("daily_trending", date, {json(report)});
  out << "daily " << date << ": " << records.size() << " papers, "
      << report.top_topics.size() << " topics\n";
  return 0;
}

inline int cmd_monthly(const Config& cfg, Store& store, WarningLog& warnings,
                       const std::string& month, std::ostream& out) {
  if (!is_valid_month(month))
    throw std::invalid_argument("invalid month for --month: " + month);
  auto raw = store.read_papers(first_day_of_month(month), last_day_of_month(month));
  auto deduped = dedupe_month(raw);
  auto summaries =
      store.read_summaries(first_day_of_month(month), last_day_of_month(month));

  AliasTable aliases = load_aliases(cfg);
  LabelInventory inventory = collect_labels(month, store, aliases);
  std::unique_ptr<Provider> provider;
  if (narrative_capable(cfg.provider)) provider = make_provider(cfg, cfg.provider);
  MonthlyTrendReport consolidation =
      consolidate_month(inventory, provider.get(), warnings, cfg.target_clusters);
  MonthlyTrendReport report = render_monthly(month, deduped, summaries, consolidation, store,
                                             provider.get(), &warnings);
  store.write_partition("monthly_trending", month, {json(report)});
  out << "monthly " << month << ": " << deduped.size() << " papers, "
      << report.top_topics.size() << " clusters\n";
  return 0;
}

inline int cmd_lifecycle(const Config& cfg, Store& store, WarningLog& warnings,
                         const std::string& window_end, int min_papers, std::ostream& out) {
  if (!is_valid_month(window_end))
    throw std::invalid_argument("invalid month for --window-end: " + window_end);
  auto records = store.read_papers(kEpochStart, kEpochEnd);
  auto summaries = store.read_summaries(kEpochStart, kEpochEnd);

  MonthlyMappings mappings;
  if (!cfg.raw_labels) {
    AliasTable aliases = load_aliases(cfg);
    std::unique_ptr<Provider> provider;
    if (narrative_capable(cfg.provider)) provider = make_provider(cfg, cfg.provider);
    for (const auto& month : months_covered(records)) {
      LabelInventory inventory = collect_labels(month, store, aliases);
      if (inventory.counts.empty()) continue;
      mappings[month] = label_to_cluster(
          consolidate_month(inventory, provider.get(), warnings, cfg.target_clusters));
    }
  }

  CorpusIndex index =
      build_index(summaries, records, cfg.raw_labels ? nullptr : &mappings);
  LifecycleSnapshot snap = build_lifecycle_snapshot(index, window_end, min_papers);
  auto validation = validate_record(snap);
  if (!validation.ok())
    throw std::logic_error("snapshot failed validation: " + validation.violations.front());
  store.write_partition("lifecycle", snap.snapshot_id, {json(snap)});
  render_lifecycle(snap, store);

  std::set<std::string> used_names;
  for (const auto& [topic, per_month] : snap.topics_by_month) {
    std::string name = "lifecycle_" + sanitize_filename(topic);
    if (!used_names.insert(name).second) {
      warnings.add("plot name collision, skipping series for: " + topic);
      continue;
    }
    std::vector<std::optional<double>> series;
    for (const auto& month : snap.sorted_months) {
      auto it = per_month.find(month);
      int total = snap.total_by_month.at(month);
      series.push_back(it == per_month.end() || total == 0
                           ? 0.0
                           : static_cast<double>(it->second) / total);
    }
    emit_trajectory(store, name, snap.sorted_months, series);
  }
  out << "lifecycle " << snap.snapshot_id << ": " << snap.lifecycle_data.size()
      << " topics classified\n";
  return 0;
}

inline int cmd_stats([[maybe_unused]] const Config& cfg, Store& store,
                     [[maybe_unused]] WarningLog& warnings, const std::string& from,
                     const std::string& to, std::ostream& out) {
  require_range(from, to);
  auto records = store.read_papers(from, to);
  if (records.empty()) throw std::invalid_argument("no papers in range " + from + ".." + to);
  auto summaries = store.read_summaries(from, to);
  CorpusIndex index = build_index(summaries, records);
  std::vector<int> upvotes;
  for (const auto& r : records) upvotes.push_back(r.upvotes);
  EngagementStats engagement = engagement_stats(upvotes);
  DayRateSplit split = weekday_weekend_means(records, from, to);

  json monthly_entropy = json::object();
  std::vector<std::optional<double>> entropy_series;
  for (const auto& month : index.months) {
    auto counts = label_counts_for_month(index, month);
    if (counts.empty()) {
      entropy_series.push_back(std::nullopt);
      continue;
    }
    double h = shannon_entropy(counts);
    monthly_entropy[month] = h;
    entropy_series.push_back(h);
  }
  auto emergence = new_topic_counts(index);
  json emergence_json = json::object();
  std::vector<std::optional<double>> emergence_series;
  for (const auto& month : index.months) {
    emergence_json[month] = emergence.at(month);
    emergence_series.push_back(static_cast<double>(emergence.at(month)));
  }

  json result;
  result["papers"] = engagement.count;
  result["engagement"] = {{"median", engagement.median}, {"p90", engagement.p90},
                          {"max", engagement.max},       {"mean", engagement.mean},
                          {"skewness", engagement.skewness}};
  result["cadence"] = {{"weekday_mean", split.weekday_mean},
                       {"weekend_mean", split.weekend_mean},
                       {"weekday_days", split.weekday_days},
                       {"weekend_days", split.weekend_days}};
  result["entropy_bits_by_month"] = monthly_entropy;
  result["new_topics_by_month"] = emergence_json;
  result["median_upvotes_per_paper"] = engagement.median;
  auto topic_median = median_of_topic_medians(index);
  result["median_of_topic_median_upvotes"] =
      topic_median ? json(*topic_median) : json(nullptr);
  out << result.dump(2) << "\n";

  if (!index.months.empty()) {
    emit_series(store, "entropy", "month", index.months, {{"bits", entropy_series}});
    emit_series(store, "new_topics", "month", index.months, {{"count", emergence_series}});
  }
  return 0;
}

inline int cmd_novelty([[maybe_unused]] const Config& cfg, Store& store,
                       [[maybe_unused]] WarningLog& warnings, const std::string& month,
                       int top_k, std::ostream& out) {
  if (!is_valid_month(month))
    throw std::invalid_argument("invalid month for --month: " + month);
  auto records = store.read_papers(kEpochStart, kEpochEnd);
  auto summaries = store.read_summaries(kEpochStart, kEpochEnd);
  CorpusIndex index = build_index(summaries, records);

  struct Row {
    std::string paper_id;
    std::string title;
    double score;
  };
  std::vector<Row> rows;
  for (const auto& [id, topics] : index.topics_of) {
    if (index.month_of_paper(id) != month) continue;
    auto score = novelty_score(topics, index);
    if (score) rows.push_back({id, index.papers.at(id).title, *score});
  }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    return a.score != b.score ? a.score > b.score : a.paper_id < b.paper_id;
  });
  if (top_k >= 0 && rows.size() > static_cast<size_t>(top_k)) rows.resize(top_k);

  json result = json::array();
  for (const auto& r : rows)
    result.push_back({{"paper_id", r.paper_id}, {"title", r.title}, {"score", r.score}});
  out << result.dump(2) << "\n";
  return 0;
}

inline std::string now_utc_iso() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

}  // namespace detail

// Parses and executes one command. Arguments exclude the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Config cfg;
  WarningLog warnings;

  // Defaults, then config file, then environment, then flags. The file
  // location honors an explicit --config; otherwise <data_dir>/config
  // with data_dir resolved from flag or environment.
  std::string config_path = detail::scan_flag(args, "--config");
  if (config_path.empty()) {
    std::string dd = detail::scan_flag(args, "--data-dir");
    if (dd.empty()) dd = detail::env_or("PAPERBREW_DATA_DIR", cfg.data_dir.string());
    std::string candidate = (fs::path(dd) / "config").string();
    if (fs::exists(candidate)) config_path = candidate;
  }
  if (!config_path.empty())
    apply_config_map(cfg, parse_config_file(config_path), warnings);

  CLI::App app{"Trending research paper analytics pipeline"};
  app.name("paperbrew");
  app.require_subcommand(1);

  std::string data_dir_s = cfg.data_dir.string();
  std::string config_opt;
  app.add_option("--config", config_opt, "Config file (TOML-style key=value)");
  app.add_option("--data-dir", data_dir_s, "Data directory root")
      ->envname("PAPERBREW_DATA_DIR");
  app.add_option("--feed-url", cfg.feed_url, "Trending feed endpoint")
      ->envname("PAPERBREW_FEED_URL");
  app.add_option("--feed-token", cfg.feed_token, "Feed bearer token")
      ->envname("PAPERBREW_FEED_TOKEN");
  app.add_option("--fixtures-dir", cfg.fixtures_dir,
                 "Fixture root for offline feed and provider replay");
  app.add_option("--provider", cfg.provider, "Provider kind: mock, fixture, live, none")
      ->envname("PAPERBREW_PROVIDER");
  app.add_option("--provider-url", cfg.provider_url, "Live provider endpoint");
  app.add_option("--provider-model", cfg.provider_model, "Live provider model name");
  app.add_option("--provider-key", cfg.provider_key, "Live provider credential")
      ->envname("PAPERBREW_PROVIDER_KEY");
  app.add_option("--alias-table", cfg.alias_table, "Label alias TSV path");
  app.add_option("--concurrency", cfg.concurrency, "Parallel provider calls")
      ->check(CLI::PositiveNumber);
  app.add_flag("--raw-labels,!--no-raw-labels", cfg.raw_labels,
               "Analytics over raw labels instead of consolidated clusters");
  app.add_option("--target-clusters", cfg.target_clusters,
                 "Advisory cluster count for consolidation");

  std::string date, from, to, month, window_end, provider_override;
  int min_papers = 15, top_k = 20;

  auto* ingest = app.add_subcommand("ingest", "Fetch and persist trending papers");
  ingest->add_option("--date", date, "Single day (YYYY-MM-DD)");
  ingest->add_option("--from", from, "Range start (YYYY-MM-DD)");
  ingest->add_option("--to", to, "Range end (YYYY-MM-DD)");

  auto* summarize = app.add_subcommand("summarize", "Extract structured summaries");
  summarize->add_option("--from", from, "Range start (YYYY-MM-DD)")->required();
  summarize->add_option("--to", to, "Range end (YYYY-MM-DD)")->required();
  summarize->add_option("--provider", provider_override, "Override provider kind");

  auto* daily = app.add_subcommand("daily", "Render the daily trend report");
  daily->add_option("--date", date, "Day to report (YYYY-MM-DD)")->required();

  auto* monthly = app.add_subcommand("monthly", "Consolidate and render the monthly report");
  monthly->add_option("--month", month, "Month to report (YYYY-MM)")->required();

  auto* lifecycle = app.add_subcommand("lifecycle", "Classify topic lifecycles");
  lifecycle->add_option("--window-end", window_end, "Analysis window end (YYYY-MM)")
      ->required();
  lifecycle->add_option("--min-papers", min_papers, "Topic admission floor");

  auto* stats = app.add_subcommand("stats", "Corpus statistics over a date range");
  stats->add_option("--from", from, "Range start (YYYY-MM-DD)")->required();
  stats->add_option("--to", to, "Range end (YYYY-MM-DD)")->required();

  auto* novelty = app.add_subcommand("novelty", "Rank a month's papers by novelty");
  novelty->add_option("--month", month, "Month to rank (YYYY-MM)")->required();
  novelty->add_option("--top", top_k, "Rows to emit");

  for (auto* sub : {ingest, summarize, daily, monthly, lifecycle, stats, novelty})
    sub->fallthrough();

  std::vector<const char*> argv;
  argv.push_back("paperbrew");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  cfg.data_dir = data_dir_s;
  if (!valid_provider_kind(cfg.provider)) {
    err << "error: unknown provider kind: " << cfg.provider << "\n";
    return 2;
  }

  Store store(cfg.data_dir);
  std::string command;
  int code = 2;
  try {
    if (ingest->parsed()) {
      command = "ingest";
      code = detail::cmd_ingest(cfg, store, warnings, date, from, to, out);
    } else if (summarize->parsed()) {
      command = "summarize";
      code = detail::cmd_summarize(cfg, store, warnings, from, to, provider_override, out);
    } else if (daily->parsed()) {
      command = "daily";
      code = detail::cmd_daily(cfg, store, warnings, date, out);
    } else if (monthly->parsed()) {
      command = "monthly";
      code = detail::cmd_monthly(cfg, store, warnings, month, out);
    } else if (lifecycle->parsed()) {
      command = "lifecycle";
      code = detail::cmd_lifecycle(cfg, store, warnings, window_end, min_papers, out);
    } else if (stats->parsed()) {
      command = "stats";
      code = detail::cmd_stats(cfg, store, warnings, from, to, out);
    } else if (novelty->parsed()) {
      command = "novelty";
      code = detail::cmd_novelty(cfg, store, warnings, month, top_k, out);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    code = 2;
  }

  for (const auto& w : warnings.messages()) err << "warning: " << w << "\n";
  try {
    json op{{"ts", detail::now_utc_iso()},
            {"command", command},
            {"args", args},
            {"exit", code},
            {"warnings", warnings.size()}};
    store.append_line(cfg.data_dir / "oplog.jsonl", op.dump());
  } catch (const std::exception&) {
    // an unwritable log must not mask the command's own outcome
  }
  return code;
}

}  // namespace paperbrew::cli
