#pragma once

// Synthetic authorship corpora: each author is a seeded order-2 Markov chain
// over a small alphabet of letters plus a space.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mhrnn/random.hpp"

namespace mhrnn {

class MarkovChain {
 public:
  // Each context (previous two symbols) gets a sparse distribution over a few
  // successors, blended with `shared` when given so authors have a common
  // base language. `own_weight` is the weight of the author's own component.
  MarkovChain(std::size_t alphabet_size, std::uint64_t seed, const MarkovChain* shared = nullptr,
              double own_weight = 0.5);

  std::string sample(std::size_t length, Rng& rng) const;
  std::size_t alphabet_size() const { return k_; }
  double probability(std::size_t a, std::size_t b, std::size_t next) const {
    return table_[(a * k_ + b) * k_ + next];
  }

 private:
  std::size_t k_;
  std::vector<double> table_;  // [k * k contexts x k]
};

struct SyntheticCorpusSpec {
  std::size_t problems = 1;
  std::size_t authors = 4;            // per problem
  std::size_t docs_per_author = 6;
  std::size_t doc_length = 2000;
  std::size_t controls = 8;
  std::size_t alphabet_size = 20;
  double own_weight = 0.5;
  std::uint64_t seed = 1;
};

struct SyntheticCorpusPaths {
  std::filesystem::path corpus;    // <root>/corpus/<problem>/*.txt + collection.json
  std::filesystem::path controls;  // <root>/controls/*.txt
  std::filesystem::path truth;     // <root>/truth/<problem>/clustering.json
};

// Documents are assigned to authors in a seeded random order, so file order
// carries no authorship signal. Controls come from one further chain.
SyntheticCorpusPaths write_synthetic_corpus(const SyntheticCorpusSpec& spec,
                                            const std::filesystem::path& root);

}  // namespace mhrnn
