#include <catch2/catch_amalgamated.hpp>

#include <paperbrew/store.hpp>
#include <paperbrew/summarize.hpp>

#include "testutil.hpp"

using namespace paperbrew;

namespace {

json good_payload(const std::vector<std::string>& topics = {"Alpha", "Beta"},
                  const std::vector<std::string>& keywords = {"k1", "k2", "k3", "k4"}) {
  json j;
  j["concise_summary"] = "We study the thing. It works.";
  j["detailed_analysis"] = "Pros: effective. Cons: untested at scale.";
  j["topics"] = topics;
  j["keywords"] = keywords;
  j["concise_summary_zh"] = "[zh] We study the thing. It works.";
  j["detailed_analysis_zh"] = "[zh] Pros: effective. Cons: untested at scale.";
  json tz = json::array(), kz = json::array();
  for (const auto& t : topics) tz.push_back("[zh] " + t);
  for (const auto& k : keywords) kz.push_back("[zh] " + k);
  j["topics_zh"] = tz;
  j["keywords_zh"] = kz;
  return j;
}

ProviderResponse response_of(const std::string& raw) { return {raw, "test", 0.0}; }

}  // namespace

TEST_CASE("extract_first_json_object tolerates fences and prose") {
  json payload = {{"a", 1}};
  auto direct = extract_first_json_object(payload.dump());
  REQUIRE(direct.has_value());
  CHECK((*direct)["a"] == 1);

  auto fenced = extract_first_json_object("Sure:\n```json\n" + payload.dump() + "\n```\ndone");
  REQUIRE(fenced.has_value());
  CHECK((*fenced)["a"] == 1);

  auto nested = extract_first_json_object(R"({"text": "braces {inside \" strings}", "n": 2})");
  REQUIRE(nested.has_value());
  CHECK((*nested)["n"] == 2);

  // A balanced but invalid object is skipped in favor of a later valid one.
  auto second = extract_first_json_object("{\"broken\": } then " + payload.dump());
  REQUIRE(second.has_value());
  CHECK((*second)["a"] == 1);

  CHECK_FALSE(extract_first_json_object("no objects here").has_value());
  CHECK_FALSE(extract_first_json_object("{never closed").has_value());
}

TEST_CASE("parse_summary maps a complete response") {
  auto outcome = parse_summary(response_of(good_payload().dump()), "2503.00001");
  REQUIRE(outcome.ok());
  const auto& s = *outcome.summary;
  CHECK(s.paper_id == "2503.00001");
  CHECK(s.provider_id == "test");
  CHECK(s.topics == std::vector<std::string>{"Alpha", "Beta"});
  CHECK(s.keywords.size() == 4);
  CHECK(s.topics_zh == std::vector<std::string>{"[zh] Alpha", "[zh] Beta"});
  CHECK(s.extracted_at.empty());
  CHECK(outcome.warnings.empty());
}

TEST_CASE("parse_summary reports missing fields with the raw text") {
  json j = good_payload();
  j.erase("detailed_analysis");
  auto outcome = parse_summary(response_of(j.dump()), "2503.00001");
  CHECK_FALSE(outcome.ok());
  CHECK(outcome.error.find("detailed_analysis") != std::string::npos);
  CHECK(outcome.raw == j.dump());

  j = good_payload();
  j["topics"] = "not a list";
  outcome = parse_summary(response_of(j.dump()), "2503.00001");
  CHECK_FALSE(outcome.ok());
  CHECK(outcome.error.find("list field") != std::string::npos);

  outcome = parse_summary(response_of("total nonsense"), "2503.00001");
  CHECK_FALSE(outcome.ok());
  CHECK(outcome.error.find("no parseable JSON") != std::string::npos);
}

TEST_CASE("parse_summary collapses duplicate topics and keeps zh aligned") {
  json j = good_payload({"Alpha", "Beta", "Alpha"});
  j["topics_zh"] = {"[zh] Alpha", "[zh] Beta", "[zh] dup"};
  auto outcome = parse_summary(response_of(j.dump()), "2503.00001");
  REQUIRE(outcome.ok());
  CHECK(outcome.summary->topics == std::vector<std::string>{"Alpha", "Beta"});
  CHECK(outcome.summary->topics_zh ==
        std::vector<std::string>{"[zh] Alpha", "[zh] Beta"});
}

TEST_CASE("parse_summary normalizes label whitespace") {
  json j = good_payload({" Sparse   Attention ", "Beta"});
  j["topics_zh"] = {"[zh] sa", "[zh] b"};
  auto outcome = parse_summary(response_of(j.dump()), "2503.00001");
  REQUIRE(outcome.ok());
  CHECK(outcome.summary->topics.front() == "Sparse Attention");
}

TEST_CASE("parse_summary falls back to English labels when zh topics are short") {
  json j = good_payload({"Alpha", "Beta"});
  j["topics_zh"] = {"[zh] Alpha"};
  auto outcome = parse_summary(response_of(j.dump()), "2503.00001");
  REQUIRE(outcome.ok());
  CHECK(outcome.summary->topics_zh == std::vector<std::string>{"[zh] Alpha", "Beta"});
}

TEST_CASE("parse_summary rejects misaligned zh keywords") {
  json j = good_payload();
  j["keywords_zh"] = {"[zh] k1", "[zh] k2", "[zh] k3"};
  auto outcome = parse_summary(response_of(j.dump()), "2503.00001");
  CHECK_FALSE(outcome.ok());
  CHECK(outcome.error.find("keywords_zh") != std::string::npos);
}

TEST_CASE("parse_summary enforces hard bounds and surfaces soft warnings") {
  json j = good_payload({"A", "B", "C", "D", "E", "F"});
  auto outcome = parse_summary(response_of(j.dump()), "2503.00001");
  CHECK_FALSE(outcome.ok());
  CHECK(outcome.error.find("hard bounds") != std::string::npos);

  j = good_payload({"Single"});
  outcome = parse_summary(response_of(j.dump()), "2503.00001");
  REQUIRE(outcome.ok());
  CHECK(outcome.warnings.size() == 1);
}

TEST_CASE("parse_summary keeps a provider-supplied extraction timestamp") {
  json j = good_payload();
  j["extracted_at"] = "2025-06-01T12:00:00Z";
  auto outcome = parse_summary(response_of(j.dump()), "2503.00001");
  REQUIRE(outcome.ok());
  CHECK(outcome.summary->extracted_at == "2025-06-01T12:00:00Z");
}

TEST_CASE("build_request degrades pdf problems to text-only") {
  testutil::TempDir dir;
  WarningLog warnings;
  auto record = testutil::make_record("2503.00001", "2025-03-04");

  SECTION("no pdf requested") {
    auto req = build_request(record, false, warnings);
    CHECK_FALSE(req.pdf_bytes.has_value());
    CHECK(req.title == record.title);
    CHECK(req.schema.has_field("topics_zh"));
  }
  SECTION("unresolvable reference") {
    record.pdf_ref = (dir.path() / "missing.pdf").string();
    auto req = build_request(record, true, warnings);
    CHECK_FALSE(req.pdf_bytes.has_value());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings.messages().front().find("not resolvable") != std::string::npos);
  }
  SECTION("over the byte cap") {
    testutil::write_file(dir.path() / "big.pdf", std::string(100, 'x'));
    record.pdf_ref = (dir.path() / "big.pdf").string();
    auto req = build_request(record, true, warnings, 10);
    CHECK_FALSE(req.pdf_bytes.has_value());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings.messages().front().find("byte cap") != std::string::npos);
  }
  SECTION("small readable pdf is attached") {
    testutil::write_file(dir.path() / "ok.pdf", "%PDF-tiny");
    record.pdf_ref = (dir.path() / "ok.pdf").string();
    auto req = build_request(record, true, warnings);
    REQUIRE(req.pdf_bytes.has_value());
    CHECK(*req.pdf_bytes == "%PDF-tiny");
    CHECK(warnings.empty());
  }
}

TEST_CASE("summarize_one repairs a malformed response") {
  testutil::TempDir dir;
  Store store(dir.path());
  WarningLog warnings;
  ScriptedProvider provider({"garbage, no object here", good_payload().dump()});
  auto record = testutil::make_record("2503.00001", "2025-03-04");

  auto result = summarize_one(record, provider, store, warnings);
  REQUIRE(result.summary.has_value());
  CHECK(result.attempts == 2);
  CHECK(store.has_summary("2503.00001") == CacheTier::Local);

  auto requests = provider.requests();
  REQUIRE(requests.size() == 2);
  CHECK(requests[0].instruction.find("could not be parsed") == std::string::npos);
  CHECK(requests[1].instruction.find("could not be parsed") != std::string::npos);
  CHECK(requests[1].instruction.find("garbage, no object here") != std::string::npos);
}

TEST_CASE("summarize_one gives up after max attempts") {
  testutil::TempDir dir;
  Store store(dir.path());
  WarningLog warnings;
  ScriptedProvider provider({"bad", "bad", "bad"});
  auto record = testutil::make_record("2503.00001", "2025-03-04");

  SummarizeOptions opts;
  opts.max_attempts = 3;
  auto result = summarize_one(record, provider, store, warnings, opts);
  REQUIRE(result.failure.has_value());
  CHECK(result.failure->attempts == 3);
  CHECK(result.failure->error.find("no parseable JSON") != std::string::npos);
  CHECK(provider.calls() == 3);
  CHECK(store.has_summary("2503.00001") == CacheTier::Absent);
}

TEST_CASE("provider exceptions count as attempts") {
  testutil::TempDir dir;
  Store store(dir.path());
  WarningLog warnings;
  ScriptedProvider provider({});  // throws on every call
  auto record = testutil::make_record("2503.00001", "2025-03-04");

  auto result = summarize_one(record, provider, store, warnings);
  REQUIRE(result.failure.has_value());
  CHECK(result.failure->attempts == 3);
  CHECK(result.failure->error.find("provider call failed") != std::string::npos);
}

TEST_CASE("summarize_one stamps the extraction time when the provider omits it") {
  testutil::TempDir dir;
  Store store(dir.path());
  WarningLog warnings;
  ScriptedProvider provider({good_payload().dump()});
  auto record = testutil::make_record("2503.00001", "2025-03-04");

  SummarizeOptions opts;
  opts.now = [] { return std::string("2099-01-01T00:00:00Z"); };
  auto result = summarize_one(record, provider, store, warnings, opts);
  REQUIRE(result.summary.has_value());
  CHECK(result.summary->extracted_at == "2099-01-01T00:00:00Z");
  auto stored = store.read_summaries("2025-03-04", "2025-03-04");
  REQUIRE(stored.size() == 1);
  CHECK(stored[0].extracted_at == "2099-01-01T00:00:00Z");
}

TEST_CASE("batch skips cached papers and itemizes failures") {
  testutil::TempDir dir;
  Store store(dir.path());
  WarningLog warnings;
  std::vector<PaperRecord> records;
  for (int i = 0; i < 5; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "2503.%05d", i + 1);
    records.push_back(testutil::make_record(id, "2025-03-04"));
  }
  store.upsert_summary(testutil::make_summary("2503.00001", {"Cached"}), "2025-03-04");

  // Three bad responses burn every attempt for the first pending paper;
  // the remaining three papers parse cleanly.
  ScriptedProvider provider(
      {"bad", "bad", "bad", good_payload().dump(), good_payload().dump(),
       good_payload().dump()});
  SummarizeOptions opts;
  opts.concurrency = 1;
  auto report = summarize_batch(records, provider, store, warnings, opts);
  CHECK(report.skipped_cached == 1);
  CHECK(report.succeeded == 3);
  CHECK(report.failed == 1);
  REQUIRE(report.dead_letters.size() == 1);
  CHECK(report.dead_letters[0].paper_id == "2503.00002");
  CHECK(report.succeeded + report.skipped_cached + report.failed ==
        static_cast<int>(records.size()));
}

TEST_CASE("batch fan-out is safe and the rerun is a no-op") {
  testutil::TempDir dir;
  Store store(dir.path());
  WarningLog warnings;
  MockProvider provider;
  std::vector<PaperRecord> records;
  for (int i = 0; i < 30; ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "2503.%05d", i + 1);
    records.push_back(testutil::make_record(id, i % 2 ? "2025-03-03" : "2025-03-04", i,
                                            "Sparse Attention Study " + std::to_string(i),
                                            "We analyze kernels. Results follow. More text "
                                            "about benchmarks and layers."));
  }

  SummarizeOptions opts;
  opts.concurrency = 4;
  auto first = summarize_batch(records, provider, store, warnings, opts);
  CHECK(first.succeeded == 30);
  CHECK(first.failed == 0);
  CHECK(store.read_summaries("2025-03-03", "2025-03-04").size() == 30);

  auto before = testutil::snapshot_tree(dir.path());
  auto second = summarize_batch(records, provider, store, warnings, opts);
  CHECK(second.succeeded == 0);
  CHECK(second.skipped_cached == 30);
  CHECK(testutil::snapshot_tree(dir.path()) == before);
}

TEST_CASE("batch over nothing reports nothing") {
  testutil::TempDir dir;
  Store store(dir.path());
  WarningLog warnings;
  MockProvider provider;
  auto report = summarize_batch({}, provider, store, warnings);
  CHECK(report.succeeded == 0);
  CHECK(report.skipped_cached == 0);
  CHECK(report.failed == 0);
}

TEST_CASE("dead letters partition by day and merge by paper id") {
  testutil::TempDir dir;
  Store store(dir.path());
  std::vector<PaperRecord> records = {
      testutil::make_record("2503.00001", "2025-03-03"),
      testutil::make_record("2503.00002", "2025-03-04"),
      testutil::make_record("2503.00003", "2025-03-03"),
  };

  write_dead_letters(store, records,
                     {{"2503.00001", "boom", 3}, {"2503.00002", "bust", 3}});
  auto day3 = testutil::read_file(dir.path() / "deadletter" / "2025-03-03.jsonl");
  auto day4 = testutil::read_file(dir.path() / "deadletter" / "2025-03-04.jsonl");
  CHECK(day3.find("2503.00001") != std::string::npos);
  CHECK(day3.find("2503.00002") == std::string::npos);
  CHECK(day4.find("2503.00002") != std::string::npos);

  // A later run adds a new failure and repeats an old one; the file ends
  // up with one line per paper.
  write_dead_letters(store, records,
                     {{"2503.00001", "boom again", 3}, {"2503.00003", "new", 3}});
  day3 = testutil::read_file(dir.path() / "deadletter" / "2025-03-03.jsonl");
  CHECK(day3.find("boom again") != std::string::npos);
  CHECK(day3.find("2503.00003") != std::string::npos);
  int lines = 0;
  for (char c : day3)
    if (c == '\n') ++lines;
  CHECK(lines == 2);

  // Failures for papers outside the batch land in an explicit bucket.
  write_dead_letters(store, records, {{"2503.99999", "orphan", 1}});
  CHECK(fs::exists(dir.path() / "deadletter" / "unknown.jsonl"));

  // No failures writes nothing.
  testutil::TempDir clean;
  Store clean_store(clean.path());
  write_dead_letters(clean_store, records, {});
  CHECK_FALSE(fs::exists(clean.path() / "deadletter"));
}

TEST_CASE("mock provider output parses and validates") {
  auto record = testutil::make_record(
      "2503.00001", "2025-03-04", 5, "Sparse Attention Kernels for Long Documents",
      "We present a kernel family for sparse attention. Experiments demonstrate gains. "
      "Latency drops while accuracy holds across benchmarks.");
  MockProvider provider;
  WarningLog warnings;
  auto req = build_request(record, false, warnings);
  auto outcome = parse_summary(provider.complete(req), record.paper_id);
  REQUIRE(outcome.ok());
  CHECK(outcome.summary->topics == std::vector<std::string>{"Sparse", "Attention"});
  CHECK(outcome.summary->extracted_at == MockProvider::kExtractedAt);
  CHECK(validate_record(*outcome.summary).ok());

  // Byte-identical across calls, the property idempotent reruns lean on.
  CHECK(provider.complete(req).raw == provider.complete(req).raw);
}

TEST_CASE("replay provider round-trips a recorded response") {
  testutil::TempDir dir;
  WarningLog warnings;
  auto record = testutil::make_record("2503.00001", "2025-03-04");
  auto req = build_request(record, false, warnings);
  std::string key = ReplayProvider::request_key(req);
  testutil::write_file(dir.path() / "provider" / (key + ".json"), good_payload().dump());

  ReplayProvider provider(dir.path());
  auto outcome = parse_summary(provider.complete(req), record.paper_id);
  REQUIRE(outcome.ok());
  CHECK(outcome.summary->topics == std::vector<std::string>{"Alpha", "Beta"});

  ProviderRequest other = req;
  other.title = "Different Title";
  CHECK_THROWS_AS(provider.complete(other), ProviderError);
}
