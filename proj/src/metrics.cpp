#include "mhrnn/metrics.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

#include "mhrnn/error.hpp"
#include "mhrnn/random.hpp"

namespace mhrnn {
namespace {

// Truth label for each of pred's documents, by id.
std::vector<std::size_t> aligned_truth_labels(const Partition& pred, const Partition& truth) {
  if (pred.doc_ids.size() != truth.doc_ids.size()) {
    throw Error(ErrorCode::UniverseMismatch, "prediction and truth cover different documents");
  }
  std::unordered_map<std::string, std::size_t> truth_index;
  for (std::size_t i = 0; i < truth.doc_ids.size(); ++i) truth_index.emplace(truth.doc_ids[i], i);
  const auto truth_labels = truth.labels();
  std::vector<std::size_t> out(pred.doc_ids.size());
  for (std::size_t i = 0; i < pred.doc_ids.size(); ++i) {
    const auto it = truth_index.find(pred.doc_ids[i]);
    if (it == truth_index.end()) {
      throw Error(ErrorCode::UniverseMismatch, "document " + pred.doc_ids[i] + " is not in the truth");
    }
    out[i] = truth_labels[it->second];
  }
  return out;
}

}  // namespace

BCubed bcubed(const Partition& pred, const Partition& truth) {
  const auto truth_of = aligned_truth_labels(pred, truth);
  const auto pred_of = pred.labels();
  const std::size_t n = pred.doc_ids.size();
  if (n == 0) return {1.0, 1.0, 1.0};

  // Contingency counts: every document in cell (p, t) shares exactly those
  // n_pt documents with both its predicted and its true cluster.
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> cell;
  std::map<std::size_t, std::size_t> pred_size, truth_size;
  for (std::size_t i = 0; i < n; ++i) {
    ++cell[{pred_of[i], truth_of[i]}];
    ++pred_size[pred_of[i]];
    ++truth_size[truth_of[i]];
  }
  double precision = 0.0, recall = 0.0;
  for (const auto& [key, count] : cell) {
    const double c = static_cast<double>(count);
    precision += c * c / static_cast<double>(pred_size[key.first]);
    recall += c * c / static_cast<double>(truth_size[key.second]);
  }
  precision /= static_cast<double>(n);
  recall /= static_cast<double>(n);
  const double f = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  return {precision, recall, f};
}

double map_score(const RankedLinks& links, const Partition& truth) {
  Partition pred_universe;
  pred_universe.doc_ids = links.doc_ids;
  const auto truth_of = aligned_truth_labels(pred_universe, truth);

  std::map<std::size_t, std::size_t> sizes;
  for (auto l : truth_of) ++sizes[l];
  std::size_t relevant_total = 0;
  for (const auto& [label, s] : sizes) relevant_total += s * (s - 1) / 2;
  if (relevant_total == 0) {
    throw Error(ErrorCode::NoTrueLinks, "truth has no same-author pairs; MAP is undefined");
  }

  std::vector<Link> ordered = links.links;
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const Link& x, const Link& y) { return x.weight > y.weight; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < ordered.size(); ++r) {
    if (truth_of[ordered[r].a] == truth_of[ordered[r].b]) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(r + 1);
    }
  }
  return sum / static_cast<double>(relevant_total);
}

ShuffleBaseline random_map_baseline(const Partition& truth, std::size_t shuffles,
                                    std::uint64_t seed) {
  if (shuffles < 1) throw Error(ErrorCode::InvalidArgument, "need at least one shuffle");
  const std::size_t n = truth.doc_ids.size();
  RankedLinks links;
  links.doc_ids = truth.doc_ids;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) links.links.push_back({i, j, 0.0});
  }
  ShuffleBaseline out{0.0, {}};
  out.scores.reserve(shuffles);
  for (std::size_t s = 0; s < shuffles; ++s) {
    Rng rng(derive_seed(seed, s));
    rng.shuffle(links.links.begin(), links.links.end());
    out.scores.push_back(map_score(links, truth));
    out.mean += out.scores.back();
  }
  out.mean /= static_cast<double>(shuffles);
  return out;
}

ZeroEffortBaseline zero_effort_baseline(const std::vector<std::string>& doc_ids,
                                        std::uint64_t seed) {
  if (doc_ids.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two documents");
  Rng rng(seed);
  RankedLinks links;
  links.doc_ids = doc_ids;
  for (std::size_t i = 0; i < doc_ids.size(); ++i) {
    for (std::size_t j = i + 1; j < doc_ids.size(); ++j) {
      links.links.push_back({i, j, rng.uniform()});
    }
  }
  std::stable_sort(links.links.begin(), links.links.end(),
                   [](const Link& x, const Link& y) { return x.weight > y.weight; });
  return {cowardly(doc_ids), std::move(links)};
}

}  // namespace mhrnn
