#pragma once

// BCubed precision/recall/F over partitions and average precision over ranked
// links, with the random-shuffle and zero-effort baselines.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mhrnn/affinity.hpp"
#include "mhrnn/clustering.hpp"

namespace mhrnn {

struct BCubed {
  double precision;
  double recall;
  double f;
};

// Document-averaged precision and recall; F is their harmonic mean (0 when
// both are 0). Documents are matched by id, so the two partitions may list
// them in different orders, but the id sets must be equal.
BCubed bcubed(const Partition& pred, const Partition& truth);

// Average precision of the ranked list: the mean, over every same-author
// pair in the truth, of the precision at that pair's rank. Ties keep the
// order of `links`. Throws NoTrueLinks when the truth has no such pair.
double map_score(const RankedLinks& links, const Partition& truth);

struct ShuffleBaseline {
  double mean;
  std::vector<double> scores;
};

// Average precision of `shuffles` uniformly random orderings of all pairs.
// Shuffle i draws from its own seed derived from (seed, i).
ShuffleBaseline random_map_baseline(const Partition& truth, std::size_t shuffles,
                                    std::uint64_t seed);

struct ZeroEffortBaseline {
  Partition partition;
  RankedLinks links;
};

// The cowardly partition plus i.i.d. uniform link weights.
ZeroEffortBaseline zero_effort_baseline(const std::vector<std::string>& doc_ids,
                                        std::uint64_t seed);

struct ScoreReport {
  std::string problem_id;
  BCubed bcubed;
  std::optional<double> map;  // empty when the truth has no links
};

}  // namespace mhrnn
