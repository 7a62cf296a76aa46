#include "mhrnn/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <tuple>
#include <set>
#include <unordered_map>

#include "mhrnn/error.hpp"
#include "mhrnn/log.hpp"

namespace mhrnn {
namespace {

constexpr double kSaturationWarning = 1e12;

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << j.dump() << '\n';
}

std::unordered_map<std::string, std::size_t> index_of(const std::vector<std::string>& ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
  return index;
}

}  // namespace

nlohmann::json EntropyMatrix::to_json() const {
  return {{"head_ids", head_ids}, {"text_ids", text_ids}, {"values", values.values}};
}

EntropyMatrix EntropyMatrix::from_json(const nlohmann::json& j) {
  EntropyMatrix m;
  try {
    m.head_ids = j.at("head_ids").get<std::vector<std::string>>();
    m.text_ids = j.at("text_ids").get<std::vector<std::string>>();
    m.values.rows = m.head_ids.size();
    m.values.cols = m.text_ids.size();
    m.values.values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("matrix: ") + e.what());
  }
  if (m.values.values.size() != m.values.rows * m.values.cols) {
    throw Error(ErrorCode::ShapeMismatch, "matrix values do not match its id lists");
  }
  return m;
}

void EntropyMatrix::save(const std::filesystem::path& path) const { write_json(path, to_json()); }

EntropyMatrix EntropyMatrix::load(const std::filesystem::path& path) {
  return from_json(read_json(path));
}

nlohmann::json AffinityMatrix::to_json() const {
  return {{"head_ids", doc_ids}, {"text_ids", doc_ids}, {"values", values.values}};
}

AffinityMatrix AffinityMatrix::from_json(const nlohmann::json& j) {
  auto m = EntropyMatrix::from_json(j);
  if (m.head_ids != m.text_ids) {
    throw Error(ErrorCode::IdMismatch, "affinity matrix rows and columns differ");
  }
  return {std::move(m.head_ids), std::move(m.values)};
}

void AffinityMatrix::save(const std::filesystem::path& path) const { write_json(path, to_json()); }

AffinityMatrix AffinityMatrix::load(const std::filesystem::path& path) {
  return from_json(read_json(path));
}

nlohmann::json RankedLinks::to_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : links) {
    out.push_back(
        {{"document1", doc_ids[l.a]}, {"document2", doc_ids[l.b]}, {"score", l.weight}});
  }
  return out;
}

RankedLinks RankedLinks::from_json(const nlohmann::json& j,
                                   const std::vector<std::string>& doc_ids) {
  const auto index = index_of(doc_ids);
  RankedLinks r;
  r.doc_ids = doc_ids;
  try {
    for (const auto& e : j) {
      const auto a = index.find(e.at("document1").get<std::string>());
      const auto b = index.find(e.at("document2").get<std::string>());
      if (a == index.end() || b == index.end()) {
        throw Error(ErrorCode::UniverseMismatch, "ranking names a document outside the problem");
      }
      auto [lo, hi] = std::minmax(a->second, b->second);
      r.links.push_back({lo, hi, e.at("score").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, std::string("ranking: ") + e.what());
  }
  std::stable_sort(r.links.begin(), r.links.end(), [](const Link& x, const Link& y) {
    if (x.weight != y.weight) return x.weight > y.weight;
    return std::tie(x.a, x.b) < std::tie(y.a, y.b);
  });
  return r;
}

// ---------------------------------------------------------------------------

EntropyMatrix score_all(const Model& model, std::span<const EncodedDoc> docs) {
  EntropyMatrix m;
  if (model.head_ids.size() == model.n_heads()) {
    m.head_ids = model.head_ids;
  } else {
    for (std::size_t h = 0; h < model.n_heads(); ++h) m.head_ids.push_back(std::to_string(h));
  }
  for (const auto& d : docs) m.text_ids.push_back(d.doc_id);
  m.values = Matrix(model.n_heads(), docs.size());
  for (std::size_t t = 0; t < docs.size(); ++t) {
    const auto column = cross_entropy_all_heads(model, docs[t].symbols);
    for (std::size_t h = 0; h < column.size(); ++h) m.values(h, t) = column[h];
  }
  return m;
}

EntropyMatrix ensemble_sum(std::span<const EntropyMatrix> matrices) {
  if (matrices.empty()) throw Error(ErrorCode::InvalidArgument, "no matrices to sum");
  EntropyMatrix sum = matrices.front();
  for (const auto& m : matrices.subspan(1)) {
    if (m.values.rows != sum.values.rows || m.values.cols != sum.values.cols) {
      throw Error(ErrorCode::ShapeMismatch, "ensemble matrices differ in shape");
    }
    if (m.head_ids != sum.head_ids || m.text_ids != sum.text_ids) {
      throw Error(ErrorCode::IdMismatch, "ensemble matrices differ in head or text ids");
    }
    for (std::size_t i = 0; i < sum.values.values.size(); ++i) {
      sum.values.values[i] += m.values.values[i];
    }
  }
  return sum;
}

Matrix normalize_by_controls(const EntropyMatrix& matrix, std::span<const std::size_t> control_heads,
                             const Problem& problem) {
  if (control_heads.empty()) {
    throw Error(ErrorCode::NoControls, "control heads are required for normalization");
  }
  const auto head_index = index_of(matrix.head_ids);
  const auto text_index = index_of(matrix.text_ids);
  const std::size_t n = problem.doc_ids.size();
  std::vector<std::size_t> rows(n), cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto h = head_index.find(problem.doc_ids[i]);
    const auto t = text_index.find(problem.doc_ids[i]);
    if (h == head_index.end() || t == text_index.end()) {
      throw Error(ErrorCode::IdMismatch, "matrix lacks problem document " + problem.doc_ids[i]);
    }
    rows[i] = h->second;
    cols[i] = t->second;
  }
  const std::set<std::size_t> problem_rows(rows.begin(), rows.end());
  for (std::size_t c : control_heads) {
    if (c >= matrix.values.rows) throw Error(ErrorCode::InvalidArgument, "control head out of range");
    if (problem_rows.count(c)) {
      throw Error(ErrorCode::InvalidArgument, "control head is also a problem head");
    }
  }

  Matrix out(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double mean = 0.0;
    for (std::size_t c : control_heads) mean += matrix.values(c, cols[j]);
    mean /= static_cast<double>(control_heads.size());
    for (std::size_t i = 0; i < n; ++i) out(i, j) = matrix.values(rows[i], cols[j]) - mean;
  }
  return out;
}

AffinityMatrix to_affinity(const Matrix& normalized, std::vector<std::string> doc_ids) {
  if (normalized.rows != normalized.cols || normalized.rows != doc_ids.size()) {
    throw Error(ErrorCode::ShapeMismatch, "affinity needs a square matrix matching its ids");
  }
  const std::size_t n = normalized.rows;
  AffinityMatrix a{std::move(doc_ids), Matrix(n, n)};
  bool saturated = false;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double v = std::exp(-(normalized(i, j) + normalized(j, i)));
      saturated = saturated || v > kSaturationWarning;
      a.values(i, j) = v;
    }
  }
  if (saturated) log::warning("affinity entries exceed 1e12; exponentiation is not clipped");
  return a;
}

RankedLinks rank_links(const AffinityMatrix& affinity) {
  const std::size_t n = affinity.size();
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "ranking needs at least two documents");
  RankedLinks r;
  r.doc_ids = affinity.doc_ids;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = affinity(i, j);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      r.links.push_back({i, j, v});
    }
  }
  if (n == 2) {
    r.links.front().weight = 1.0;
    r.degenerate = true;
  } else if (hi == lo) {
    for (auto& l : r.links) l.weight = 0.5;
    r.degenerate = true;
    log::warning("all link affinities are equal; weights set to 0.5");
  } else {
    for (auto& l : r.links) l.weight = (l.weight - lo) / (hi - lo);
  }
  // Links were generated in (a, b) order, so a stable sort keeps that tie order.
  std::stable_sort(r.links.begin(), r.links.end(),
                   [](const Link& x, const Link& y) { return x.weight > y.weight; });
  return r;
}

double diagonal_dominance(const AffinityMatrix& affinity) {
  const std::size_t n = affinity.size();
  if (n == 0) return 1.0;
  std::size_t dominant = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bool ok = true;
    for (std::size_t j = 0; j < n && ok; ++j) ok = affinity(i, i) >= affinity(i, j);
    dominant += ok;
  }
  const double fraction = static_cast<double>(dominant) / static_cast<double>(n);
  if (fraction < 1.0) {
    log::warning("diagonal is the row maximum for " + std::to_string(dominant) + " of " +
               std::to_string(n) + " rows");
  }
  return fraction;
}

}  // namespace mhrnn
