#pragma once

// Threshold clustering strategies over an affinity matrix, anchor detection,
// and the clusteriness rule that picks a threshold between the anchors.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhrnn/affinity.hpp"

namespace mhrnn {

struct Partition {
  std::vector<std::string> doc_ids;
  // Disjoint index sets covering doc_ids. Canonical form: each cluster sorted,
  // clusters ordered by their first member.
  std::vector<std::vector<std::size_t>> clusters;

  void canonicalize();
  bool is_valid() const;
  std::size_t size() const { return clusters.size(); }

  // Builds a partition from a cluster label per document.
  static Partition from_labels(std::vector<std::string> doc_ids,
                               const std::vector<std::size_t>& labels);
  std::vector<std::size_t> labels() const;

  // Clustering format: [[{"document": "a.txt"}, ...], ...].
  nlohmann::json to_json() const;
  static Partition from_json(const nlohmann::json& j);
  static Partition load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const Partition&, const Partition&) = default;
};

enum class Strategy { cowardly, single_link, cluster_aware, pair_first };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

// Every document alone.
Partition cowardly(const std::vector<std::string>& doc_ids);

// Connected components of the graph of pairs with affinity >= t.
Partition single_link(const AffinityMatrix& affinity, double t);

// Greedy merging in descending link order, accepting a merge only when the
// mean affinity over all pairs in the union is at least t. Repeats until a
// full pass makes no merge.
Partition cluster_aware(const AffinityMatrix& affinity, double t);

// Reconstruction of the "accidental" pair-first algorithm. Phase one accepts
// links >= t, in descending order, only between two unpaired singletons.
// Phase two (optional) then merges clusters over the remaining links >= t
// under the cluster-aware mean criterion, so groups larger than two need
// strong support from every member.
Partition pair_first(const AffinityMatrix& affinity, double t, bool allow_merges = true);

Partition run_strategy(Strategy strategy, const AffinityMatrix& affinity, double t);

struct Anchors {
  double t_cliff;
  double t_diag;
  bool cliff_found = true;  // false when no threshold gave one cluster
};

// Median of the diagonal (mean of the middle pair for even N), and the largest
// distinct off-diagonal affinity at which the strategy yields one cluster.
// Throws DegenerateAnchors when t_cliff > t_diag.
Anchors find_anchors(const AffinityMatrix& affinity, Strategy strategy);

// t_d - c (t_d - t_c).
double clusteriness_threshold(const Anchors& anchors, double c);

struct ClusterinessEntry {
  std::string language;
  std::string genre;
  Strategy strategy = Strategy::pair_first;
  double c = 0.8;
};

class ClusterinessConfig {
 public:
  ClusterinessConfig();  // shipped per-language/genre defaults

  // [{"language", "genre", "strategy", "c"}, ...]; an entry whose language
  // and genre are both "*" or absent is the default.
  static ClusterinessConfig from_json(const nlohmann::json& j);
  static ClusterinessConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  // Exact (language, genre) match, then language with any genre, then default.
  const ClusterinessEntry& lookup(std::string_view language, std::string_view genre) const;

  // Forces one strategy on every entry.
  void override_strategy(Strategy s);

  std::vector<ClusterinessEntry> entries;
  ClusterinessEntry fallback;
};

// find_anchors -> clusteriness_threshold -> strategy. Degenerate anchors fall
// back to the cowardly partition with a warning.
Partition cluster_problem(const AffinityMatrix& affinity, const ClusterinessConfig& config,
                          std::string_view language, std::string_view genre);

// Same composition with an explicit strategy and coefficient.
Partition cluster_with(const AffinityMatrix& affinity, Strategy strategy, double c);

}  // namespace mhrnn
