#pragma once

// File-based pipeline stages: prep, train, score, combine, cluster, eval,
// report, baseline, and the end-to-end run. Stages communicate through files
// in the output directory so ensemble members can run independently.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhrnn/affinity.hpp"
#include "mhrnn/clustering.hpp"
#include "mhrnn/corpus.hpp"
#include "mhrnn/error.hpp"
#include "mhrnn/metrics.hpp"
#include "mhrnn/model.hpp"

namespace mhrnn {

// One ensemble member. When leak_over_heads is set, the leak rate becomes
// leak_over_heads / M for a model with M heads.
struct MemberSpec {
  Hyperparameters hyper;
  std::optional<double> leak_over_heads;
  bool seed_given = false;

  nlohmann::json to_json() const;
  static MemberSpec from_json(const nlohmann::json& j);
};

struct RunConfig {
  std::filesystem::path corpus;
  std::filesystem::path controls;
  std::filesystem::path out;
  std::filesystem::path truth;  // optional
  std::optional<std::filesystem::path> clusteriness;
  std::optional<std::filesystem::path> equivalences;
  std::optional<Strategy> strategy;
  std::string language = "en";
  std::size_t n_controls = 80;
  std::uint64_t seed = 1;
  double min_frequency = 1e-4;
  std::size_t jobs = 1;
  std::size_t max_problem_docs = kDefaultMaxProblemDocs;
  std::vector<MemberSpec> ensemble;  // empty: default_ensemble()
  bool resume = false;

  nlohmann::json to_json() const;
  // Relative paths in the file are resolved against base_dir.
  static RunConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  static RunConfig load(const std::filesystem::path& path);
};

// Five members with a fixed per-language variation pattern (hidden
// size, noise, leak, over-fit epochs, direction, word DF). Hidden sizes are
// scaled by min(1, total_symbols / 1e6) with a floor of 16.
std::vector<MemberSpec> default_ensemble(std::string_view language, std::size_t total_symbols);

// Loaded inputs shared by the stages.
class Workspace {
 public:
  // Loads the corpus and controls, builds and saves the alphabet, fills in
  // the ensemble, and writes <out>/workspace.json.
  static Workspace prepare(RunConfig config);
  // Reopens a prepared output directory.
  static Workspace open(const std::filesystem::path& out);

  const RunConfig& config() const { return config_; }
  const Collection& collection() const { return collection_; }
  const std::vector<Document>& controls() const { return controls_; }
  const Alphabet& alphabet() const { return alphabet_; }
  const EquivalenceClasses& classes() const { return classes_; }

  // Hyperparameters of a member with leak resolved for this corpus.
  Hyperparameters member_hyper(std::size_t member) const;
  TrainingSet training_set(const Hyperparameters& hyper) const;

  std::filesystem::path model_path(std::size_t member) const;
  std::filesystem::path log_path(std::size_t member) const;
  std::filesystem::path matrix_path(std::size_t member) const;
  std::filesystem::path combined_path() const;
  std::filesystem::path problem_dir(const Problem& p) const;

 private:
  RunConfig config_;
  Collection collection_;
  std::vector<Document> controls_;
  Alphabet alphabet_{{" "}, {}, 0.5};
  EquivalenceClasses classes_;
};

TrainingLog run_train(const Workspace& ws, std::size_t member);
EntropyMatrix run_score(const Workspace& ws, std::size_t member);
EntropyMatrix run_combine(const Workspace& ws);

// Writes clustering.json, ranking.json, and affinity.json for every problem.
void run_cluster(const Workspace& ws, const ClusterinessConfig& config);

ClusterinessConfig resolve_clusteriness(const RunConfig& config);

// Reads <truth>/<problem_id>/clustering.json.
Partition load_truth(const std::filesystem::path& truth_root, const std::string& problem_id);

// Per-problem BCubed and MAP of the written outputs; writes <out>/eval.csv.
std::vector<ScoreReport> run_eval(const Workspace& ws, const std::filesystem::path& truth_root);

struct ReportRow {
  std::string language;
  std::string genre;
  std::string problem_id;
  std::optional<double> map;
  double coward;
  double best;
  double c_best;
  double fixed;
  double c_fixed;
};

// Table of MAP and F(BCubed) for cowardly, best-over-sweep, and fixed
// clusteriness; writes <out>/report.csv.
std::vector<ReportRow> run_report(const Workspace& ws, const std::filesystem::path& truth_root,
                                  const ClusterinessConfig& config);
std::string report_csv(const std::vector<ReportRow>& rows);

struct BaselineRow {
  std::string problem_id;
  std::optional<double> random_map;
  double coward_f;
  std::optional<double> zero_effort_map;
};

// Random-shuffle MAP and the zero-effort baseline for every problem under the
// truth root; writes <out>/baseline.csv when out is non-empty.
std::vector<BaselineRow> run_baseline(const std::filesystem::path& truth_root,
                                      std::size_t shuffles, std::uint64_t seed,
                                      const std::filesystem::path& out = {});

// A failure tagged with the stage it happened in.
class StageError : public Error {
 public:
  StageError(std::string stage, const Error& cause)
      : Error(cause.code(), cause.what()), stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

// prep -> train/score per member (up to config.jobs at a time) -> combine ->
// cluster -> manifest, then eval and report when a truth directory is set.
void run_pipeline(const RunConfig& config);

}  // namespace mhrnn
