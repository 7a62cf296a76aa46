#include "mhrnn/synthetic.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "mhrnn/clustering.hpp"
#include "mhrnn/error.hpp"

namespace fs = std::filesystem;

namespace mhrnn {
namespace {

constexpr std::size_t kSuccessors = 4;

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

std::string numbered(const char* prefix, std::size_t i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%03zu%s", prefix, i, suffix);
  return buf;
}

}  // namespace

MarkovChain::MarkovChain(std::size_t alphabet_size, std::uint64_t seed,
                         const MarkovChain* shared, double own_weight)
    : k_(alphabet_size), table_(alphabet_size * alphabet_size * alphabet_size, 0.0) {
  if (k_ < 2 || k_ > 26) throw Error(ErrorCode::InvalidArgument, "alphabet size must be 2..26");
  Rng rng(seed);
  const double own = shared ? own_weight : 1.0;
  for (std::size_t ctx = 0; ctx < k_ * k_; ++ctx) {
    double* row = table_.data() + ctx * k_;
    std::vector<double> weights(kSuccessors);
    double total = 0.0;
    for (auto& w : weights) total += (w = 0.1 + rng.uniform());
    for (std::size_t s = 0; s < kSuccessors; ++s) row[rng.below(k_)] += own * weights[s] / total;
    if (shared) {
      for (std::size_t n = 0; n < k_; ++n) row[n] += (1.0 - own) * shared->table_[ctx * k_ + n];
    }
  }
}

std::string MarkovChain::sample(std::size_t length, Rng& rng) const {
  std::string out;
  out.reserve(length);
  std::size_t a = rng.below(k_), b = rng.below(k_);
  for (std::size_t i = 0; i < length; ++i) {
    const double* row = table_.data() + (a * k_ + b) * k_;
    double u = rng.uniform();
    std::size_t next = k_ - 1;
    for (std::size_t n = 0; n < k_; ++n) {
      if (u < row[n]) {
        next = n;
        break;
      }
      u -= row[n];
    }
    // The last symbol is a space so the text has word boundaries.
    out.push_back(next + 1 == k_ ? ' ' : static_cast<char>('a' + next));
    a = b;
    b = next;
  }
  return out;
}

SyntheticCorpusPaths write_synthetic_corpus(const SyntheticCorpusSpec& spec, const fs::path& root) {
  SyntheticCorpusPaths paths{root / "corpus", root / "controls", root / "truth"};
  fs::create_directories(paths.corpus);
  fs::create_directories(paths.controls);
  fs::create_directories(paths.truth);

  const MarkovChain base(spec.alphabet_size, derive_seed(spec.seed, 0));
  std::uint64_t stream = 1;
  Rng rng(derive_seed(spec.seed, 1000));
  nlohmann::json manifest = nlohmann::json::array();

  for (std::size_t p = 0; p < spec.problems; ++p) {
    const std::string problem = numbered("problem", p + 1, "");
    fs::create_directories(paths.corpus / problem);
    fs::create_directories(paths.truth / problem);

    std::vector<MarkovChain> authors;
    for (std::size_t a = 0; a < spec.authors; ++a) {
      authors.emplace_back(spec.alphabet_size, derive_seed(spec.seed, stream++), &base,
                           spec.own_weight);
    }
    const std::size_t n = spec.authors * spec.docs_per_author;
    std::vector<std::size_t> author_of(n);
    for (std::size_t i = 0; i < n; ++i) author_of[i] = i / spec.docs_per_author;
    rng.shuffle(author_of.begin(), author_of.end());

    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) {
      names.push_back(numbered("document", i + 1, ".txt"));
      write_text(paths.corpus / problem / names.back(),
                 authors[author_of[i]].sample(spec.doc_length, rng));
    }
    Partition::from_labels(names, author_of).save(paths.truth / problem / "clustering.json");
    manifest.push_back({{"problem_id", problem}, {"language", "en"}, {"genre", "synthetic"}});
  }
  {
    std::ofstream out(paths.corpus / "collection.json");
    out << manifest.dump(2) << '\n';
  }

  const MarkovChain control_author(spec.alphabet_size, derive_seed(spec.seed, stream++), &base,
                                   spec.own_weight);
  for (std::size_t c = 0; c < spec.controls; ++c) {
    write_text(paths.controls / numbered("control", c + 1, ".txt"),
               control_author.sample(spec.doc_length, rng));
  }
  return paths;
}

}  // namespace mhrnn
