#include "mhrnn/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <map>
#include <set>
#include <sstream>

#include <unicode/utf8.h>

#include "mhrnn/error.hpp"
#include "mhrnn/log.hpp"
#include "mhrnn/random.hpp"

namespace fs = std::filesystem;

namespace mhrnn {
namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<fs::path> text_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".txt") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

std::string checked_read(const fs::path& path) {
  auto raw = read_file(path);
  if (!is_valid_utf8(raw)) {
    throw Error(ErrorCode::NonUtf8File, "not valid UTF-8: " + path.string());
  }
  return raw;
}

struct ManifestEntry {
  std::string problem_id;
  std::string language;
  std::string genre;
};

std::optional<std::vector<ManifestEntry>> read_manifest(const fs::path& root) {
  fs::path path = root / kCollectionManifest;
  if (!fs::exists(path)) path = root / "info.json";
  if (!fs::exists(path)) return std::nullopt;
  std::ifstream in(path);
  std::vector<ManifestEntry> entries;
  try {
    for (const auto& e : nlohmann::json::parse(in)) {
      ManifestEntry m;
      m.problem_id = e.contains("problem_id") ? e.at("problem_id").get<std::string>()
                                              : e.at("folder").get<std::string>();
      m.language = e.value("language", "");
      m.genre = e.value("genre", "");
      entries.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
  return entries;
}

}  // namespace

bool is_valid_utf8(std::string_view bytes) {
  const auto* s = reinterpret_cast<const uint8_t*>(bytes.data());
  const auto n = static_cast<int32_t>(bytes.size());
  int32_t i = 0;
  while (i < n) {
    UChar32 c;
    U8_NEXT(s, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

Collection load_collection(const fs::path& root, std::string_view default_language,
                           std::size_t max_docs) {
  if (!fs::is_directory(root)) {
    throw Error(ErrorCode::MissingDirectory, "collection root not found: " + root.string());
  }
  std::vector<ManifestEntry> entries;
  if (auto manifest = read_manifest(root)) {
    entries = std::move(*manifest);
  } else {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(root)) {
      const auto name = entry.path().filename().string();
      if (entry.is_directory() && !name.empty() && name[0] != '.') names.push_back(name);
    }
    std::sort(names.begin(), names.end());
    for (auto& n : names) entries.push_back({std::move(n), {}, {}});
  }
  if (entries.empty()) {
    throw Error(ErrorCode::EmptyProblem, "no problems under " + root.string());
  }

  Collection collection;
  std::map<std::string, std::string> id_by_content;
  for (const auto& entry : entries) {
    const fs::path dir = root / entry.problem_id;
    if (!fs::is_directory(dir)) {
      throw Error(ErrorCode::MissingDirectory, "problem directory not found: " + dir.string());
    }
    Problem problem;
    problem.problem_id = entry.problem_id;
    problem.language = entry.language.empty() ? std::string(default_language) : entry.language;
    problem.genre = entry.genre;
    for (const auto& file : text_files(dir)) {
      auto raw = checked_read(file);
      const auto filename = file.filename().string();
      auto [it, inserted] = id_by_content.try_emplace(raw, entry.problem_id + "/" + filename);
      if (inserted) {
        collection.documents.push_back({it->second, std::move(raw), DocRole::problem, file});
      }
      problem.doc_ids.push_back(it->second);
      problem.filenames.push_back(filename);
    }
    if (problem.doc_ids.empty()) {
      throw Error(ErrorCode::EmptyProblem, "problem has no .txt documents: " + dir.string());
    }
    if (problem.doc_ids.size() > max_docs) {
      throw Error(ErrorCode::TooManyDocuments,
                  problem.problem_id + " has " + std::to_string(problem.doc_ids.size()) +
                      " documents; limit is " + std::to_string(max_docs));
    }
    collection.problems.push_back(std::move(problem));
  }
  return collection;
}

std::vector<Document> load_controls(const fs::path& dir, std::size_t n, std::uint64_t seed) {
  if (n == 0) return {};
  if (!fs::is_directory(dir)) {
    throw Error(ErrorCode::MissingDirectory, "control directory not found: " + dir.string());
  }
  auto files = text_files(dir);
  if (files.size() < n) {
    throw Error(ErrorCode::InsufficientControls,
                "need " + std::to_string(n) + " control texts, found " +
                    std::to_string(files.size()) + " in " + dir.string());
  }
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots become the sample.
  for (std::size_t i = 0; i < n; ++i) {
    const auto j = i + rng.below(files.size() - i);
    std::swap(files[i], files[j]);
  }
  files.resize(n);
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });

  std::vector<Document> controls;
  controls.reserve(n);
  for (const auto& file : files) {
    controls.push_back(
        {"control/" + file.filename().string(), checked_read(file), DocRole::control, file});
  }
  return controls;
}

namespace {

std::vector<const Document*> unique_documents(const std::vector<Document>& problem_docs,
                                              const std::vector<Document>& controls) {
  std::vector<const Document*> docs;
  std::set<std::string_view> seen;
  for (const auto& d : problem_docs) {
    seen.insert(d.raw);
    docs.push_back(&d);
  }
  for (const auto& c : controls) {
    if (!seen.insert(c.raw).second) {
      log::warning("control text " + c.doc_id + " duplicates another document; skipped");
      continue;
    }
    docs.push_back(&c);
  }
  return docs;
}

}  // namespace

std::vector<NormalizedText> prepare_texts(const std::vector<Document>& problem_docs,
                                          const std::vector<Document>& controls,
                                          std::string_view language,
                                          std::optional<double> df_threshold,
                                          const EquivalenceClasses& classes) {
  std::vector<NormalizedText> texts;
  for (const Document* d : unique_documents(problem_docs, controls)) {
    texts.push_back(normalize(d->raw, language, classes, d->doc_id));
  }
  if (df_threshold) {
    const auto table = doc_frequency(texts);
    for (auto& t : texts) t = mask_rare_words(t, table, *df_threshold);
  }
  return texts;
}

TrainingSet assemble(const std::vector<Problem>& problems,
                     const std::vector<Document>& problem_docs,
                     const std::vector<Document>& controls, const Alphabet& alphabet,
                     std::optional<double> df_threshold, bool reversed,
                     const EquivalenceClasses& classes) {
  const auto texts =
      prepare_texts(problem_docs, controls, alphabet.language_tag(), df_threshold, classes);

  std::set<std::string> problem_ids;
  for (const auto& d : problem_docs) problem_ids.insert(d.doc_id);

  TrainingSet set;
  set.problems = problems;
  set.documents.reserve(texts.size());
  for (const auto& text : texts) {
    const std::size_t head = set.documents.size();
    if (!set.head_of.emplace(text.source_id, head).second) {
      throw Error(ErrorCode::IdMismatch, "duplicate document id " + text.source_id);
    }
    if (!problem_ids.count(text.source_id)) set.controls.push_back(head);
    set.documents.push_back(encode(text, alphabet, reversed));
  }
  for (const auto& p : problems) {
    for (const auto& id : p.doc_ids) {
      if (!set.head_of.count(id)) {
        throw Error(ErrorCode::IdMismatch, "problem " + p.problem_id + " references unknown " + id);
      }
    }
  }
  return set;
}

}  // namespace mhrnn
