#pragma once

// Problem collections, control texts, and the combined training set with one
// model head per unique document.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "mhrnn/textprep.hpp"

namespace mhrnn {

enum class DocRole { problem, control };

struct Document {
  std::string doc_id;
  std::string raw;
  DocRole role = DocRole::problem;
  std::filesystem::path path;
};

struct Problem {
  std::string problem_id;
  std::vector<std::string> doc_ids;    // collection-wide ids, in filename order
  std::vector<std::string> filenames;  // problem-relative names, parallel to doc_ids
  std::string language;
  std::string genre;
};

struct Collection {
  std::vector<Problem> problems;
  std::vector<Document> documents;  // unique by content
};

inline constexpr std::size_t kDefaultMaxProblemDocs = 100;
inline const std::string kCollectionManifest = "collection.json";

bool is_valid_utf8(std::string_view bytes);

// Reads <root>/<problem_id>/*.txt. Files with byte-identical contents are
// stored once and shared between problems; the id of a stored document is
// "<problem_id>/<filename>" of its first occurrence. Problem order follows
// collection.json (or info.json) when present, otherwise directory name.
Collection load_collection(const std::filesystem::path& root,
                           std::string_view default_language = {},
                           std::size_t max_docs = kDefaultMaxProblemDocs);

// Seeded sample of n .txt files from dir, returned in filename order with
// ids "control/<filename>".
std::vector<Document> load_controls(const std::filesystem::path& dir, std::size_t n,
                                    std::uint64_t seed);

struct TrainingSet {
  std::vector<EncodedDoc> documents;                   // index == head
  std::unordered_map<std::string, std::size_t> head_of;
  std::vector<std::size_t> controls;                   // ascending head indices
  std::vector<Problem> problems;

  std::size_t n_heads() const { return documents.size(); }
  std::size_t n_problem_docs() const { return documents.size() - controls.size(); }
};

// Normalizes problem documents then controls (dropping controls identical to
// a problem document) and, given a threshold, masks rare words using document
// frequencies counted over both groups.
std::vector<NormalizedText> prepare_texts(
    const std::vector<Document>& problem_docs, const std::vector<Document>& controls,
    std::string_view language, std::optional<double> df_threshold,
    const EquivalenceClasses& classes = EquivalenceClasses::defaults());

// Encodes everything in one direction with contiguous heads: problem
// documents in collection order, controls last.
TrainingSet assemble(const std::vector<Problem>& problems,
                     const std::vector<Document>& problem_docs,
                     const std::vector<Document>& controls, const Alphabet& alphabet,
                     std::optional<double> df_threshold, bool reversed,
                     const EquivalenceClasses& classes = EquivalenceClasses::defaults());

}  // namespace mhrnn
