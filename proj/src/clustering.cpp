#include "mhrnn/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "mhrnn/error.hpp"
#include "mhrnn/log.hpp"

namespace mhrnn {

// ---------------------------------------------------------------------------
// Partition

void Partition::canonicalize() {
  for (auto& c : clusters) std::sort(c.begin(), c.end());
  std::erase_if(clusters, [](const auto& c) { return c.empty(); });
  std::sort(clusters.begin(), clusters.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
}

bool Partition::is_valid() const {
  std::vector<int> seen(doc_ids.size(), 0);
  for (const auto& c : clusters) {
    if (c.empty()) return false;
    for (auto i : c) {
      if (i >= doc_ids.size() || seen[i]++) return false;
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; });
}

Partition Partition::from_labels(std::vector<std::string> doc_ids,
                                 const std::vector<std::size_t>& labels) {
  Partition p;
  p.doc_ids = std::move(doc_ids);
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(i);
  for (auto& [label, members] : groups) p.clusters.push_back(std::move(members));
  p.canonicalize();
  return p;
}

std::vector<std::size_t> Partition::labels() const {
  std::vector<std::size_t> out(doc_ids.size(), 0);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    for (auto i : clusters[c]) out[i] = c;
  }
  return out;
}

nlohmann::json Partition::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& c : clusters) {
    nlohmann::json cluster = nlohmann::json::array();
    for (auto i : c) cluster.push_back({{"document", doc_ids[i]}});
    out.push_back(std::move(cluster));
  }
  return out;
}

Partition Partition::from_json(const nlohmann::json& j) {
  Partition p;
  std::unordered_map<std::string, std::size_t> index;
  try {
    for (const auto& cluster : j) {
      std::vector<std::size_t> members;
      for (const auto& e : cluster) {
        const auto id = e.at("document").get<std::string>();
        if (!index.emplace(id, p.doc_ids.size()).second) {
          throw Error(ErrorCode::CorruptFile, "document " + id + " appears in two clusters");
        }
        members.push_back(p.doc_ids.size());
        p.doc_ids.push_back(id);
      }
      if (!members.empty()) p.clusters.push_back(std::move(members));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("clustering: ") + e.what());
  }
  p.canonicalize();
  return p;
}

Partition Partition::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
}

void Partition::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::cowardly: return "cowardly";
    case Strategy::single_link: return "single_link";
    case Strategy::cluster_aware: return "cluster_aware";
    case Strategy::pair_first: return "pair_first";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view s) {
  for (auto st : {Strategy::cowardly, Strategy::single_link, Strategy::cluster_aware,
                  Strategy::pair_first}) {
    if (s == to_string(st)) return st;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown clustering strategy: " + std::string(s));
}

// ---------------------------------------------------------------------------
// Strategies

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns the surviving root.
  std::size_t merge(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return a;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return a;
  }

  std::size_t size_of(std::size_t x) { return size_[find(x)]; }

  std::vector<std::size_t> labels() {
    std::vector<std::size_t> out(parent_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = find(i);
    return out;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

// Upper-triangle pairs in descending affinity, ties by (a, b).
std::vector<Link> sorted_links(const AffinityMatrix& affinity) {
  const std::size_t n = affinity.size();
  std::vector<Link> links;
  links.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) links.push_back({i, j, affinity(i, j)});
  }
  std::stable_sort(links.begin(), links.end(),
                   [](const Link& x, const Link& y) { return x.weight > y.weight; });
  return links;
}

// Tracks, per cluster root, the sum of internal pair affinities and the sum
// of affinities to every other root, so the mean of a prospective union is
// O(1) and a merge is O(N).
class MeanTracker {
 public:
  explicit MeanTracker(const AffinityMatrix& a)
      : n_(a.size()), uf_(n_), internal_(n_, 0.0), cross_(a.values) {}

  std::size_t find(std::size_t x) { return uf_.find(x); }
  std::size_t size_of(std::size_t x) { return uf_.size_of(x); }

  double union_mean(std::size_t ra, std::size_t rb) {
    const double n = static_cast<double>(uf_.size_of(ra) + uf_.size_of(rb));
    const double pairs = n * (n - 1.0) / 2.0;
    return (internal_[ra] + internal_[rb] + cross_(ra, rb)) / pairs;
  }

  void merge(std::size_t ra, std::size_t rb) {
    const double joined = internal_[ra] + internal_[rb] + cross_(ra, rb);
    const std::size_t root = uf_.merge(ra, rb);
    const std::size_t gone = root == ra ? rb : ra;
    internal_[root] = joined;
    for (std::size_t d = 0; d < n_; ++d) {
      cross_(root, d) += cross_(gone, d);
      cross_(d, root) = cross_(root, d);
    }
  }

  std::vector<std::size_t> labels() { return uf_.labels(); }

 private:
  std::size_t n_;
  UnionFind uf_;
  std::vector<double> internal_;
  Matrix cross_;  // only entries between live roots are meaningful
};

// Passes over links until none merges; links below `min_link` are skipped.
void merge_by_mean(MeanTracker& tracker, const std::vector<Link>& links, double t,
                   double min_link) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& l : links) {
      if (l.weight < min_link) break;
      const auto ra = tracker.find(l.a);
      const auto rb = tracker.find(l.b);
      if (ra == rb) continue;
      // A mean of equal values can round to just below them.
      if (tracker.union_mean(ra, rb) >= t - 1e-12 * std::max(1.0, std::abs(t))) {
        tracker.merge(ra, rb);
        changed = true;
      }
    }
  }
}

Partition single_link_sorted(const AffinityMatrix& a, const std::vector<Link>& links, double t) {
  UnionFind uf(a.size());
  for (const auto& l : links) {
    if (l.weight < t) break;
    uf.merge(l.a, l.b);
  }
  return Partition::from_labels(a.doc_ids, uf.labels());
}

Partition cluster_aware_sorted(const AffinityMatrix& a, const std::vector<Link>& links, double t) {
  MeanTracker tracker(a);
  merge_by_mean(tracker, links, t, -std::numeric_limits<double>::infinity());
  return Partition::from_labels(a.doc_ids, tracker.labels());
}

Partition pair_first_sorted(const AffinityMatrix& a, const std::vector<Link>& links, double t,
                            bool allow_merges) {
  MeanTracker tracker(a);
  for (const auto& l : links) {
    if (l.weight < t) break;
    if (tracker.size_of(l.a) == 1 && tracker.size_of(l.b) == 1) {
      tracker.merge(tracker.find(l.a), tracker.find(l.b));
    }
  }
  if (allow_merges) merge_by_mean(tracker, links, t, t);
  return Partition::from_labels(a.doc_ids, tracker.labels());
}

Partition run_sorted(Strategy s, const AffinityMatrix& a, const std::vector<Link>& links,
                     double t) {
  switch (s) {
    case Strategy::cowardly: return cowardly(a.doc_ids);
    case Strategy::single_link: return single_link_sorted(a, links, t);
    case Strategy::cluster_aware: return cluster_aware_sorted(a, links, t);
    case Strategy::pair_first: return pair_first_sorted(a, links, t, true);
  }
  return cowardly(a.doc_ids);
}

}  // namespace

Partition cowardly(const std::vector<std::string>& doc_ids) {
  Partition p;
  p.doc_ids = doc_ids;
  for (std::size_t i = 0; i < doc_ids.size(); ++i) p.clusters.push_back({i});
  return p;
}

Partition single_link(const AffinityMatrix& affinity, double t) {
  return single_link_sorted(affinity, sorted_links(affinity), t);
}

Partition cluster_aware(const AffinityMatrix& affinity, double t) {
  return cluster_aware_sorted(affinity, sorted_links(affinity), t);
}

Partition pair_first(const AffinityMatrix& affinity, double t, bool allow_merges) {
  return pair_first_sorted(affinity, sorted_links(affinity), t, allow_merges);
}

Partition run_strategy(Strategy strategy, const AffinityMatrix& affinity, double t) {
  return run_sorted(strategy, affinity, sorted_links(affinity), t);
}

// ---------------------------------------------------------------------------
// Anchors and thresholds

Anchors find_anchors(const AffinityMatrix& affinity, Strategy strategy) {
  const std::size_t n = affinity.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "anchors need at least two documents");

  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = affinity(i, i);
  std::sort(diag.begin(), diag.end());
  const double t_diag = n % 2 == 1 ? diag[n / 2] : (diag[n / 2 - 1] + diag[n / 2]) / 2.0;

  const auto links = sorted_links(affinity);
  std::vector<double> candidates;
  for (const auto& l : links) {
    if (candidates.empty() || l.weight != candidates.back()) candidates.push_back(l.weight);
  }

  Anchors anchors{candidates.back(), t_diag, false};
  if (strategy == Strategy::cowardly) {
    log::warning("cowardly strategy never forms one cluster; cliff set to the lowest link");
  } else {
    for (double t : candidates) {
      if (run_sorted(strategy, affinity, links, t).size() == 1) {
        anchors.t_cliff = t;
        anchors.cliff_found = true;
        break;
      }
    }
    if (!anchors.cliff_found) {
      log::warning("no threshold yields a single cluster; cliff set to the lowest link");
    }
  }
  if (anchors.t_cliff > anchors.t_diag) {
    throw Error(ErrorCode::DegenerateAnchors,
                "cliff anchor " + std::to_string(anchors.t_cliff) + " lies above diagonal anchor " +
                    std::to_string(anchors.t_diag));
  }
  return anchors;
}

double clusteriness_threshold(const Anchors& anchors, double c) {
  if (!(c >= 0.0 && c <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "clusteriness must lie in [0, 1]");
  }
  return anchors.t_diag - c * (anchors.t_diag - anchors.t_cliff);
}

// ---------------------------------------------------------------------------
// Configuration

ClusterinessConfig::ClusterinessConfig() {
  // Coefficients tuned per language and genre.
  entries = {
      {"en", "articles", Strategy::pair_first, 0.82},
      {"en", "reviews", Strategy::pair_first, 0.79},
      {"nl", "articles", Strategy::pair_first, 0.81},
      {"nl", "reviews", Strategy::pair_first, 0.77},
      {"gr", "articles", Strategy::pair_first, 0.85},
      {"gr", "reviews", Strategy::pair_first, 0.82},
  };
  fallback = {"*", "*", Strategy::pair_first, 0.8};
}

ClusterinessConfig ClusterinessConfig::from_json(const nlohmann::json& j) {
  ClusterinessConfig config;
  config.entries.clear();
  try {
    for (const auto& e : j) {
      ClusterinessEntry entry;
      entry.language = e.value("language", "*");
      entry.genre = e.value("genre", "*");
      entry.strategy = parse_strategy(e.value("strategy", std::string("pair_first")));
      entry.c = e.at("c").get<double>();
      if (!(entry.c >= 0.0 && entry.c <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "clusteriness must lie in [0, 1]");
      }
      if (entry.language == "*" && entry.genre == "*") {
        config.fallback = entry;
      } else {
        config.entries.push_back(std::move(entry));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("clusteriness config: ") + e.what());
  }
  return config;
}

ClusterinessConfig ClusterinessConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, path.string() + ": " + e.what());
  }
}

nlohmann::json ClusterinessConfig::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  auto row = [](const ClusterinessEntry& e) {
    return nlohmann::json{{"language", e.language},
                          {"genre", e.genre},
                          {"strategy", to_string(e.strategy)},
                          {"c", e.c}};
  };
  for (const auto& e : entries) out.push_back(row(e));
  out.push_back(row(fallback));
  return out;
}

const ClusterinessEntry& ClusterinessConfig::lookup(std::string_view language,
                                                    std::string_view genre) const {
  for (const auto& e : entries) {
    if (e.language == language && e.genre == genre) return e;
  }
  for (const auto& e : entries) {
    if (e.language == language && e.genre == "*") return e;
  }
  return fallback;
}

void ClusterinessConfig::override_strategy(Strategy s) {
  for (auto& e : entries) e.strategy = s;
  fallback.strategy = s;
}

Partition cluster_with(const AffinityMatrix& affinity, Strategy strategy, double c) {
  if (strategy == Strategy::cowardly || affinity.size() < 2) return cowardly(affinity.doc_ids);
  try {
    const auto anchors = find_anchors(affinity, strategy);
    return run_strategy(strategy, affinity, clusteriness_threshold(anchors, c));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateAnchors) throw;
    log::warning(std::string(e.what()) + "; using the cowardly partition");
    return cowardly(affinity.doc_ids);
  }
}

Partition cluster_problem(const AffinityMatrix& affinity, const ClusterinessConfig& config,
                          std::string_view language, std::string_view genre) {
  const auto& entry = config.lookup(language, genre);
  return cluster_with(affinity, entry.strategy, entry.c);
}

}  // namespace mhrnn
