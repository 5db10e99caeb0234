#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "paperbrew/datamodel.hpp"
#include "paperbrew/util.hpp"

// Date-partitioned newline-delimited JSON storage. One file per partition,
// one record per line, records sorted by primary key so that any sequence
// of upserts converges to the same bytes. Files are replaced atomically
// (write temp, rename), never appended.

namespace paperbrew {

namespace fs = std::filesystem;

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class CacheTier { Local, Remote, Absent };

// Second cache tier consulted when the local index misses. Implementations
// may throw on outage; the store degrades to a local-only answer.
class RemoteLookup {
 public:
  virtual ~RemoteLookup() = default;
  virtual bool contains(const std::string& paper_id) = 0;
};

class NullRemoteLookup final : public RemoteLookup {
 public:
  bool contains(const std::string&) override { return false; }
};

// Points at a second store tree with the same layout and answers from its
// summaries dataset. Stands in for a remote hub.
class DirRemoteLookup final : public RemoteLookup {
 public:
  explicit DirRemoteLookup(fs::path root) : root_(std::move(root)) {}

  bool contains(const std::string& paper_id) override {
    if (!scanned_) scan();
    return ids_.count(paper_id) > 0;
  }

 private:
  void scan() {
    scanned_ = true;
    fs::path dir = root_ / "summaries";
    if (!fs::exists(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".jsonl") continue;
      std::ifstream in(entry.path());
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (!j.is_discarded() && j.contains("paper_id"))
          ids_.insert(j["paper_id"].get<std::string>());
      }
    }
  }

  fs::path root_;
  bool scanned_ = false;
  std::set<std::string> ids_;
};

struct CommitReceipt {
  std::string dataset;
  std::string partition_key;
  fs::path path;
  size_t record_count = 0;
  bool changed = false;  // false when the new bytes matched the old file
};

class Store {
 public:
  explicit Store(fs::path data_dir,
                 std::shared_ptr<RemoteLookup> remote = std::make_shared<NullRemoteLookup>())
      : data_dir_(std::move(data_dir)), remote_(std::move(remote)) {}

  const fs::path& data_dir() const { return data_dir_; }
  WarningLog& warnings() { return warnings_; }

  // The four released datasets plus the internal working set of ingested
  // paper metadata.
  static bool known_dataset(const std::string& name) {
    return name == "papers" || name == "summaries" || name == "daily_trending" ||
           name == "monthly_trending" || name == "lifecycle";
  }

  static bool keyed_by_paper_id(const std::string& dataset) {
    return dataset == "papers" || dataset == "summaries";
  }

  fs::path partition_path(const std::string& dataset, const std::string& key) const {
    return data_dir_ / dataset / (key + ".jsonl");
  }

  CommitReceipt write_partition(const std::string& dataset, const std::string& key,
                                const std::vector<json>& records) {
    if (!known_dataset(dataset)) throw StoreError("unknown dataset: " + dataset);
    check_unique_keys(dataset, key, records);

    std::vector<json> sorted = records;
    if (keyed_by_paper_id(dataset)) {
      std::sort(sorted.begin(), sorted.end(), [](const json& a, const json& b) {
        return a.at("paper_id").get<std::string>() < b.at("paper_id").get<std::string>();
      });
    }
    std::string payload;
    for (const auto& r : sorted) {
      payload += r.dump();
      payload += '\n';
    }

    std::lock_guard<std::mutex> lock(write_mutex_);
    fs::path path = partition_path(dataset, key);
    CommitReceipt receipt{dataset, key, path, sorted.size(), false};
    if (fs::exists(path) && read_file(path) == payload) return receipt;
    atomic_write(path, payload);
    receipt.changed = true;
    if (dataset == "summaries") index_partition(key, sorted);
    return receipt;
  }

  // All records in partitions within [from_key, to_key], partition order
  // ascending. Missing partitions mean no data, not an error.
  std::vector<json> read_range(const std::string& dataset, const std::string& from_key,
                               const std::string& to_key) const {
    if (!known_dataset(dataset)) throw StoreError("unknown dataset: " + dataset);
    if (from_key > to_key)
      throw std::invalid_argument("inverted range: " + from_key + " > " + to_key);
    std::vector<json> out;
    fs::path dir = data_dir_ / dataset;
    if (!fs::exists(dir)) return out;
    std::vector<std::string> keys;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".jsonl") continue;
      std::string key = entry.path().stem().string();
      if (key >= from_key && key <= to_key) keys.push_back(key);
    }
    std::sort(keys.begin(), keys.end());
    for (const auto& key : keys) {
      std::ifstream in(partition_path(dataset, key));
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(json::parse(line));
      }
    }
    return out;
  }

  std::vector<PaperRecord> read_papers(const std::string& from, const std::string& to) const {
    return read_typed<PaperRecord>("papers", from, to);
  }

  std::vector<StructuredSummary> read_summaries(const std::string& from,
                                                const std::string& to) const {
    return read_typed<StructuredSummary>("summaries", from, to);
  }

  // Local checkpoint index first, then the remote tier. A remote outage
  // degrades to the local answer with a recorded warning.
  CacheTier has_summary(const std::string& paper_id) {
    ensure_index();
    if (local_index_.count(paper_id)) return CacheTier::Local;
    try {
      if (remote_ && remote_->contains(paper_id)) return CacheTier::Remote;
    } catch (const std::exception& e) {
      warnings_.add("remote lookup failed, answering from local tier only: " +
                    std::string(e.what()));
    }
    return CacheTier::Absent;
  }

  CommitReceipt upsert_summary(const StructuredSummary& summary,
                               const std::string& published_at) {
    if (!is_valid_date(published_at))
      throw StoreError("upsert_summary: bad publication date " + published_at);
    ensure_index();
    // The read-merge-write must be one critical section: concurrent
    // upserts into the same partition would otherwise drop each other's
    // records. write_mutex_ is acquired inside and stays the inner lock.
    std::lock_guard<std::mutex> lock(upsert_mutex_);
    std::vector<json> records;
    for (const auto& j : read_range("summaries", published_at, published_at))
      if (j.at("paper_id").get<std::string>() != summary.paper_id) records.push_back(j);
    records.push_back(json(summary));
    return write_partition("summaries", published_at, records);
  }

  // Replace-in-place form: derives the partition from the local index and
  // faults when the paper has never been stored.
  CommitReceipt upsert_summary(const StructuredSummary& summary) {
    ensure_index();
    auto it = local_index_.find(summary.paper_id);
    if (it == local_index_.end())
      throw StoreError("upsert_summary: unknown publication date for " + summary.paper_id);
    return upsert_summary(summary, it->second);
  }

  // Atomic whole-file replace for report/plot emission; same
  // temp-then-rename contract as partitions.
  void write_file(const fs::path& path, const std::string& content) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    atomic_write(path, content);
  }

  void append_line(const fs::path& path, const std::string& line) {
    std::lock_guard<std::mutex> lock(write_mutex_);
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::app | std::ios::binary);
    if (!out) throw StoreError("cannot open for append: " + path.string());
    out << line << '\n';
  }

 private:
  template <typename T>
  std::vector<T> read_typed(const std::string& dataset, const std::string& from,
                            const std::string& to) const {
    std::vector<T> out;
    for (const auto& j : read_range(dataset, from, to)) out.push_back(j.get<T>());
    return out;
  }

  void check_unique_keys(const std::string& dataset, const std::string& key,
                         const std::vector<json>& records) const {
    if (keyed_by_paper_id(dataset)) {
      std::set<std::string> ids;
      for (const auto& r : records) {
        if (!r.contains("paper_id")) throw StoreError("record without paper_id in " + dataset);
        if (!ids.insert(r.at("paper_id").get<std::string>()).second)
          throw StoreError("duplicate paper_id within partition input: " +
                           r.at("paper_id").get<std::string>());
      }
    } else if (records.size() > 1) {
      throw StoreError("report dataset " + dataset + " holds one record per partition, got " +
                       std::to_string(records.size()) + " for " + key);
    }
  }

  static std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }

  static void atomic_write(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw StoreError("cannot write: " + tmp.string());
      out.write(content.data(), static_cast<std::streamsize>(content.size()));
      if (!out) throw StoreError("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
  }

  void ensure_index() {
    std::lock_guard<std::mutex> lock(index_mutex_);
    if (indexed_) return;
    indexed_ = true;
    fs::path dir = data_dir_ / "summaries";
    if (!fs::exists(dir)) return;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() != ".jsonl") continue;
      std::string key = entry.path().stem().string();
      std::ifstream in(entry.path());
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.contains("paper_id")) {
          warnings_.add("skipping malformed line in summaries/" + key + ".jsonl");
          continue;
        }
        local_index_[j["paper_id"].get<std::string>()] = key;
      }
    }
  }

  void index_partition(const std::string& key, const std::vector<json>& records) {
    if (!indexed_) return;  // next ensure_index() will pick the file up
    std::erase_if(local_index_, [&](const auto& kv) { return kv.second == key; });
    for (const auto& r : records) local_index_[r.at("paper_id").get<std::string>()] = key;
  }

  fs::path data_dir_;
  std::shared_ptr<RemoteLookup> remote_;
  WarningLog warnings_;
  std::mutex write_mutex_;
  std::mutex upsert_mutex_;
  std::mutex index_mutex_;
  bool indexed_ = false;
  std::map<std::string, std::string> local_index_;  // paper_id -> partition key
};

}  // namespace paperbrew
