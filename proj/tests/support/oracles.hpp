#pragma once

// Independent reference computations used to check the library. None of these
// call into the code under test; they work from the raw definitions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

struct BCubedValue {
  double precision;
  double recall;
  double f;
};

// BCubed from the per-document-pair definition. Labels are cluster ids per
// document; n^2 comparisons, no grouping.
inline BCubedValue bcubed(const std::vector<std::size_t>& pred,
                          const std::vector<std::size_t>& truth) {
  const std::size_t n = pred.size();
  double p_sum = 0.0, r_sum = 0.0;
  for (std::size_t d = 0; d < n; ++d) {
    double same_pred = 0, same_truth = 0, both = 0;
    for (std::size_t e = 0; e < n; ++e) {
      const bool p = pred[d] == pred[e];
      const bool t = truth[d] == truth[e];
      same_pred += p;
      same_truth += t;
      both += p && t;
    }
    p_sum += both / same_pred;
    r_sum += both / same_truth;
  }
  const double p = p_sum / static_cast<double>(n);
  const double r = r_sum / static_cast<double>(n);
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

// Average precision of a ranked relevance list, normalized by the number of
// relevant items in the whole list.
inline double average_precision(const std::vector<bool>& relevant) {
  double hits = 0, sum = 0;
  for (std::size_t i = 0; i < relevant.size(); ++i) {
    if (relevant[i]) {
      hits += 1;
      sum += hits / static_cast<double>(i + 1);
    }
  }
  return hits > 0 ? sum / hits : 0.0;
}

// Expected AP of a uniformly random ordering of all document pairs, computed
// by enumerating every ordering.
inline double expected_random_ap(const std::vector<std::size_t>& truth_labels) {
  std::vector<bool> pair_relevance;
  for (std::size_t i = 0; i < truth_labels.size(); ++i) {
    for (std::size_t j = i + 1; j < truth_labels.size(); ++j) {
      pair_relevance.push_back(truth_labels[i] == truth_labels[j]);
    }
  }
  std::vector<std::size_t> order(pair_relevance.size());
  std::iota(order.begin(), order.end(), 0);
  double total = 0;
  std::size_t count = 0;
  do {
    std::vector<bool> ranked;
    for (auto k : order) ranked.push_back(pair_relevance[k]);
    total += average_precision(ranked);
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  return total / static_cast<double>(count);
}

// Number of connected components of the graph with an edge wherever the
// symmetric matrix a (row-major n x n) has an off-diagonal value >= t.
// Uses repeated relaxation of component labels rather than union-find.
inline std::size_t single_link_components(const std::vector<double>& a, std::size_t n,
                                          double t) {
  std::vector<std::size_t> label(n);
  std::iota(label.begin(), label.end(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i != j && a[i * n + j] >= t && label[j] < label[i]) {
          label[i] = label[j];
          changed = true;
        }
      }
    }
  }
  return std::set<std::size_t>(label.begin(), label.end()).size();
}

// Same-cluster relation implied by single-link clustering at t, as an n x n
// boolean matrix (transitive closure by Floyd-Warshall).
inline std::vector<bool> single_link_relation(const std::vector<double>& a, std::size_t n,
                                              double t) {
  std::vector<bool> r(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) r[i * n + j] = i == j || a[i * n + j] >= t;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (r[i * n + k] && r[k * n + j]) r[i * n + j] = true;
      }
    }
  }
  return r;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// The sorted distinct off-diagonal values of a symmetric matrix.
inline std::vector<double> distinct_off_diagonal(const std::vector<double>& a, std::size_t n) {
  std::set<double> values;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) values.insert(a[i * n + j]);
  }
  return {values.begin(), values.end()};
}

// Closed-form BCubed F of the all-singletons partition: precision is 1 and
// recall is R = mean over documents of 1 / |truth cluster|.
inline double singleton_f(const std::vector<std::size_t>& truth_labels) {
  double r = 0;
  for (auto l : truth_labels) {
    r += 1.0 / static_cast<double>(std::count(truth_labels.begin(), truth_labels.end(), l));
  }
  r /= static_cast<double>(truth_labels.size());
  return 2 * r / (1 + r);
}

}  // namespace oracle
