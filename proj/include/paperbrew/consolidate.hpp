#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "paperbrew/datamodel.hpp"
#include "paperbrew/provider.hpp"
#include "paperbrew/store.hpp"
#include "paperbrew/summarize.hpp"

// Collapses the open vocabulary of free-form topic labels into canonical
// monthly clusters with an explicit label-to-cluster mapping. The
// deterministic fallback path (case folding plus an alias table) always
// works; a provider can propose semantic merges, but its output is only
// accepted if it is a true partition of the inventory.

namespace paperbrew {

// Raw label tally for one month, before consolidation. Each paper
// contributes each of its normalized labels once.
struct LabelInventory {
  std::string month;
  std::map<std::string, int> counts;
};

// Exact-match alias pairs loaded from a two-column TSV, original TAB
// canonical. Lookup happens after whitespace normalization; aliasing is
// deliberately case-sensitive so curated entries stay precise.
class AliasTable {
 public:
  AliasTable() = default;

  static AliasTable load(const fs::path& path) {
    AliasTable table;
    std::ifstream in(path);
    if (!in) throw StoreError("cannot read alias table: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto tab = line.find('\t');
      if (tab == std::string::npos) continue;
      std::string from = trim(line.substr(0, tab));
      std::string to = trim(line.substr(tab + 1));
      if (!from.empty() && !to.empty()) table.map_[from] = to;
    }
    return table;
  }

  void add(const std::string& from, const std::string& to) { map_[from] = to; }

  std::string resolve(const std::string& label) const {
    auto it = map_.find(label);
    return it == map_.end() ? label : it->second;
  }

  size_t size() const { return map_.size(); }

 private:
  std::map<std::string, std::string> map_;
};

inline std::string normalize_label(const std::string& raw, const AliasTable& aliases) {
  return aliases.resolve(collapse_whitespace(raw));
}

// Tally of normalized labels across a month's summaries. A paper naming
// the same label twice counts once.
inline LabelInventory collect_labels(const std::string& month, Store& store,
                                     const AliasTable& aliases) {
  if (!is_valid_month(month)) throw std::invalid_argument("bad month: " + month);
  LabelInventory inv;
  inv.month = month;
  auto summaries = store.read_summaries(first_day_of_month(month), last_day_of_month(month));
  for (const auto& s : summaries) {
    std::set<std::string> labels;
    for (const auto& t : s.topics) labels.insert(normalize_label(t, aliases));
    for (const auto& label : labels) inv.counts[label] += 1;
  }
  return inv;
}

namespace detail {

// Cluster display name: the member with the highest count, ties broken
// lexicographically.
inline std::string pick_display(const std::vector<std::string>& members,
                                const std::map<std::string, int>& counts) {
  std::string display = members.front();
  int best = counts.at(display);
  for (const auto& m : members) {
    int c = counts.at(m);
    if (c > best || (c == best && m < display)) {
      display = m;
      best = c;
    }
  }
  return display;
}

inline MonthlyTrendReport fallback_consolidate(const LabelInventory& inv) {
  MonthlyTrendReport report;
  report.month = inv.month;
  std::map<std::string, std::vector<std::string>> groups;
  for (const auto& [label, count] : inv.counts) groups[to_lower(label)].push_back(label);
  for (auto& [key, members] : groups) {
    std::sort(members.begin(), members.end());
    report.topic_mapping[pick_display(members, inv.counts)] = members;
  }
  return report;
}

inline ResponseSchema clustering_schema() {
  ResponseSchema schema;
  schema.fields.push_back({"clusters", true, 1, 0});
  return schema;
}

inline std::string clustering_instruction(const LabelInventory& inv, int target_clusters) {
  std::string msg =
      "Group the topic labels below into about " + std::to_string(target_clusters) +
      " clusters of equivalent meaning. Respond with a JSON object "
      "{\"clusters\": [{\"name\": ..., \"members\": [...]}, ...]}. Every input label "
      "must appear in exactly one cluster's members list, spelled exactly as given.\n\n"
      "Labels:\n";
  for (const auto& [label, count] : inv.counts)
    msg += label + " (" + std::to_string(count) + ")\n";
  return msg;
}

struct ClusterProposal {
  std::map<std::string, std::vector<std::string>> clusters;  // name -> members
  std::vector<std::string> missing;
  bool double_assigned = false;
  bool parseable = false;
};

inline ClusterProposal parse_clusters(const std::string& raw, const LabelInventory& inv) {
  ClusterProposal prop;
  auto parsed = extract_first_json_object(raw);
  if (!parsed || !parsed->contains("clusters") || !(*parsed)["clusters"].is_array()) return prop;
  prop.parseable = true;
  std::set<std::string> assigned;
  for (const auto& cluster : (*parsed)["clusters"]) {
    if (!cluster.is_object() || !cluster.contains("name") || !cluster.contains("members") ||
        !cluster["name"].is_string() || !cluster["members"].is_array()) {
      prop.parseable = false;
      return prop;
    }
    std::string name = collapse_whitespace(cluster["name"].get<std::string>());
    if (name.empty()) name = "Other";
    for (const auto& member : cluster["members"]) {
      if (!member.is_string()) continue;
      std::string label = member.get<std::string>();
      if (!inv.counts.count(label)) continue;  // invented labels are dropped
      if (!assigned.insert(label).second) {
        prop.double_assigned = true;
        continue;
      }
      prop.clusters[name].push_back(label);
    }
  }
  for (const auto& [label, count] : inv.counts)
    if (!assigned.count(label)) prop.missing.push_back(label);
  return prop;
}

}  // namespace detail

// Consolidates one month's inventory into a report skeleton: ranked
// cluster counts plus the cluster-to-labels mapping. With no provider the
// fallback path runs directly. A provider's clustering gets one repair
// round; labels it still misses land in "Other", and double assignment or
// unparseable output after repair degrades the whole month to fallback.
inline MonthlyTrendReport consolidate_month(const LabelInventory& inv, Provider* provider,
                                            WarningLog& warnings, int target_clusters = 20) {
  if (!is_valid_month(inv.month)) throw std::invalid_argument("bad month: " + inv.month);
  MonthlyTrendReport report;
  if (inv.counts.empty()) {
    report.month = inv.month;
    return report;
  }

  if (provider == nullptr) {
    report = detail::fallback_consolidate(inv);
  } else {
    ProviderRequest req;
    req.instruction = detail::clustering_instruction(inv, target_clusters);
    req.schema = detail::clustering_schema();
    detail::ClusterProposal prop;
    bool degraded = false;
    try {
      prop = detail::parse_clusters(provider->complete(req).raw, inv);
      if (!prop.parseable || prop.double_assigned) {
        ProviderRequest retry = req;
        retry.instruction =
            "Your previous clustering was invalid (labels missing or assigned twice). " +
            req.instruction;
        prop = detail::parse_clusters(provider->complete(retry).raw, inv);
      }
    } catch (const ProviderError& e) {
      warnings.add(std::string("consolidation provider failed: ") + e.what());
      degraded = true;
    }
    if (!degraded && (!prop.parseable || prop.double_assigned)) {
      warnings.add("provider clustering invalid after repair for " + inv.month +
                   ", using fallback consolidation");
      degraded = true;
    }
    if (degraded) {
      report = detail::fallback_consolidate(inv);
    } else {
      report.month = inv.month;
      if (!prop.missing.empty()) {
        warnings.add(std::to_string(prop.missing.size()) +
                     " unassigned labels moved to Other in " + inv.month);
        auto& other = prop.clusters["Other"];
        other.insert(other.end(), prop.missing.begin(), prop.missing.end());
      }
      for (auto& [name, members] : prop.clusters) {
        std::sort(members.begin(), members.end());
        report.topic_mapping[name] = members;
      }
    }
  }

  for (const auto& [cluster, members] : report.topic_mapping) {
    int total = 0;
    for (const auto& m : members) total += inv.counts.at(m);
    report.top_topics.push_back({cluster, total});
  }
  std::sort(report.top_topics.begin(), report.top_topics.end(),
            [](const auto& a, const auto& b) {
              return a.second != b.second ? a.second > b.second : a.first < b.first;
            });

  // The partition and count-conservation guarantees hold on every path.
  int before = 0, after = 0;
  size_t mapped = 0;
  for (const auto& [label, count] : inv.counts) before += count;
  for (const auto& [cluster, count] : report.top_topics) after += count;
  for (const auto& [cluster, members] : report.topic_mapping) mapped += members.size();
  if (before != after || mapped != inv.counts.size())
    throw std::logic_error("consolidation broke the label partition for " + inv.month);
  return report;
}

// Inverts a report's cluster mapping to label -> cluster for trajectory
// building. Labels absent from the mapping pass through unchanged.
inline std::map<std::string, std::string> label_to_cluster(const MonthlyTrendReport& report) {
  std::map<std::string, std::string> out;
  for (const auto& [cluster, members] : report.topic_mapping)
    for (const auto& m : members) out[m] = cluster;
  return out;
}

}  // namespace paperbrew
