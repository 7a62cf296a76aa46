#pragma once

// Cross-entropy matrices, control normalization, symmetric affinity, and
// ranked links.

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhrnn/corpus.hpp"
#include "mhrnn/model.hpp"

namespace mhrnn {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), values(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  friend bool operator==(const Matrix&, const Matrix&) = default;
};

// Rows are model heads, columns are texts; entries in bits per character.
struct EntropyMatrix {
  std::vector<std::string> head_ids;
  std::vector<std::string> text_ids;
  Matrix values;

  nlohmann::json to_json() const;
  static EntropyMatrix from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static EntropyMatrix load(const std::filesystem::path& path);
};

// Symmetric, positive; larger means more alike.
struct AffinityMatrix {
  std::vector<std::string> doc_ids;
  Matrix values;

  std::size_t size() const { return doc_ids.size(); }
  double operator()(std::size_t i, std::size_t j) const { return values(i, j); }

  // Stored in the entropy-matrix file shape with head_ids == text_ids.
  nlohmann::json to_json() const;
  static AffinityMatrix from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static AffinityMatrix load(const std::filesystem::path& path);
};

struct Link {
  std::size_t a;  // a < b, indices into doc_ids
  std::size_t b;
  double weight;
};

struct RankedLinks {
  std::vector<std::string> doc_ids;
  std::vector<Link> links;  // descending weight, ties by (a, b)
  bool degenerate = false;  // scaling was undefined

  // Ranking format: [{"document1", "document2", "score"}].
  nlohmann::json to_json() const;
  // Accepts links in any order and sorts them; unknown documents are an error.
  static RankedLinks from_json(const nlohmann::json& j, const std::vector<std::string>& doc_ids);
};

// values[h][t] = cross_entropy(model, h, docs[t]). Head ids come from the
// model metadata when present.
EntropyMatrix score_all(const Model& model, std::span<const EncodedDoc> docs);

EntropyMatrix ensemble_sum(std::span<const EntropyMatrix> matrices);

// Problem heads x problem texts, each column shifted by minus the mean score
// the control heads give that text.
Matrix normalize_by_controls(const EntropyMatrix& matrix, std::span<const std::size_t> control_heads,
                             const Problem& problem);

// exp(-(M + M^T)).
AffinityMatrix to_affinity(const Matrix& normalized, std::vector<std::string> doc_ids);

// Upper-triangle affinities rescaled affinely onto [0, 1] and sorted.
RankedLinks rank_links(const AffinityMatrix& affinity);

// Fraction of rows whose diagonal entry is the row maximum.
double diagonal_dominance(const AffinityMatrix& affinity);

}  // namespace mhrnn
