// Command-line front end for the authorship clustering pipeline.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <atomic>

#include "mhrnn/log.hpp"
#include "mhrnn/pipeline.hpp"
#include "mhrnn/synthetic.hpp"

namespace fs = std::filesystem;
using namespace mhrnn;

namespace {

// Flags shared by the configuration-building subcommands. Unset flags leave
// the value from --config (or the default) alone.
struct ConfigFlags {
  std::string config;
  std::string corpus;
  std::string controls;
  std::string language;
  std::string out;
  std::string truth;
  std::string clusteriness;
  std::string equivalences;
  std::string strategy;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  std::optional<std::size_t> n_controls;
  std::optional<double> df_threshold;
  bool reverse = false;
  bool resume = false;

  void add(CLI::App* app) {
    app->add_option("--config", config, "Run configuration or manifest JSON");
    app->add_option("--corpus", corpus, "Corpus root (one subdirectory per problem)");
    app->add_option("--controls", controls, "Directory of control texts");
    app->add_option("--language", language, "Language tag (en, nl, gr, ...)");
    app->add_option("--out", out, "Output directory");
    app->add_option("--truth", truth, "Truth root (<truth>/<problem>/clustering.json)");
    app->add_option("--clusteriness", clusteriness, "Clusteriness configuration JSON");
    app->add_option("--equivalences", equivalences, "Character equivalence classes JSON");
    app->add_option("--strategy", strategy, "Clustering strategy for every problem");
    app->add_option("--seed", seed, "Run seed");
    app->add_option("--jobs", jobs, "Parallel ensemble members");
    app->add_option("--n-controls", n_controls, "Number of control texts to sample");
    app->add_option("--df-threshold", df_threshold, "Word DF threshold for every member");
    app->add_flag("--reverse", reverse, "Train every member on reversed text");
    app->add_flag("--resume", resume, "Reuse existing member models");
  }

  RunConfig build() const {
    RunConfig c = config.empty() ? RunConfig{} : RunConfig::load(config);
    if (!corpus.empty()) c.corpus = corpus;
    if (!controls.empty()) c.controls = controls;
    if (!language.empty()) c.language = language;
    if (!out.empty()) c.out = out;
    if (!truth.empty()) c.truth = truth;
    if (!clusteriness.empty()) c.clusteriness = fs::path(clusteriness);
    if (!equivalences.empty()) c.equivalences = fs::path(equivalences);
    if (!strategy.empty()) c.strategy = parse_strategy(strategy);
    if (seed) c.seed = *seed;
    if (jobs) c.jobs = *jobs;
    if (n_controls) c.n_controls = *n_controls;
    c.resume = c.resume || resume;
    if (df_threshold || reverse) {
      if (c.ensemble.empty()) c.ensemble.push_back(MemberSpec{});
      for (auto& m : c.ensemble) {
        if (df_threshold) m.hyper.df_threshold = *df_threshold;
        if (reverse) m.hyper.direction = Direction::reverse;
        m.hyper.validate();
      }
    }
    if (c.corpus.empty()) throw Error(ErrorCode::InvalidArgument, "--corpus is required");
    if (c.out.empty()) throw Error(ErrorCode::InvalidArgument, "--out is required");
    if (c.n_controls > 0 && c.controls.empty()) {
      throw Error(ErrorCode::InvalidArgument, "--controls is required (or --n-controls 0)");
    }
    return c;
  }
};

void report_error(const std::string& stage, const Error& e, const fs::path& out) {
  const nlohmann::json j = {
      {"error", to_string(e.code())}, {"message", e.what()}, {"stage", stage}};
  std::cerr << j.dump() << "\n";
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    std::ofstream f(out / "error.json");
    if (f) f << j.dump(2) << "\n";
  }
}

std::vector<std::size_t> members_of(const Workspace& ws, const std::optional<std::size_t>& member) {
  if (member) return {*member};
  std::vector<std::size_t> all(ws.config().ensemble.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-headed RNN authorship clustering"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Print progress");

  ConfigFlags prep_flags, pipeline_flags;
  auto* prep = app.add_subcommand("prep", "Load the corpus and controls, build the alphabet");
  prep_flags.add(prep);
  auto* pipeline = app.add_subcommand("pipeline", "Run every stage end to end");
  pipeline_flags.add(pipeline);

  std::string out, truth, clusteriness_path, strategy;
  std::optional<std::size_t> member;
  std::size_t jobs = 1;

  auto* train = app.add_subcommand("train", "Train ensemble members");
  train->add_option("--out", out, "Prepared output directory")->required();
  train->add_option("--member", member, "Member index (default: all)");
  train->add_option("--jobs", jobs, "Parallel members");

  auto* score = app.add_subcommand("score", "Score problem texts with trained members");
  score->add_option("--out", out, "Prepared output directory")->required();
  score->add_option("--member", member, "Member index (default: all)");

  auto* combine = app.add_subcommand("combine", "Sum the member entropy matrices");
  combine->add_option("--out", out, "Prepared output directory")->required();

  auto* cluster = app.add_subcommand("cluster", "Write clustering and ranking per problem");
  cluster->add_option("--out", out, "Prepared output directory")->required();
  cluster->add_option("--clusteriness", clusteriness_path, "Clusteriness configuration JSON");
  cluster->add_option("--strategy", strategy, "Strategy for every problem");

  auto* eval = app.add_subcommand("eval", "Score the outputs against truth");
  eval->add_option("--out", out, "Output directory")->required();
  eval->add_option("--truth", truth, "Truth root")->required();

  auto* report = app.add_subcommand("report", "Write the per-problem score table");
  report->add_option("--out", out, "Output directory")->required();
  report->add_option("--truth", truth, "Truth root")->required();
  report->add_option("--clusteriness", clusteriness_path, "Clusteriness configuration JSON");
  report->add_option("--strategy", strategy, "Strategy for every problem");

  std::size_t shuffles = 100;
  std::uint64_t seed = 1;
  auto* baseline = app.add_subcommand("baseline", "Random-link MAP and cowardly F per problem");
  baseline->add_option("--truth", truth, "Truth root")->required();
  baseline->add_option("--out", out, "Directory for baseline.csv");
  baseline->add_option("--shuffles", shuffles, "Shuffles per problem");
  baseline->add_option("--seed", seed, "Seed");

  SyntheticCorpusSpec synth_spec;
  auto* synth = app.add_subcommand("synth", "Write a synthetic Markov-chain corpus");
  synth->add_option("--out", out, "Destination root")->required();
  synth->add_option("--seed", synth_spec.seed, "Seed");
  synth->add_option("--problems", synth_spec.problems, "Number of problems");
  synth->add_option("--authors", synth_spec.authors, "Authors per problem");
  synth->add_option("--docs-per-author", synth_spec.docs_per_author, "Documents per author");
  synth->add_option("--length", synth_spec.doc_length, "Characters per document");
  synth->add_option("--n-controls", synth_spec.controls, "Control documents");

  CLI11_PARSE(app, argc, argv);
  log::set_verbose(verbose);

  std::string stage = app.get_subcommands().front()->get_name();
  fs::path error_dir = out;
  try {
    auto cluster_config = [&](const Workspace& ws) {
      RunConfig c = ws.config();
      if (!clusteriness_path.empty()) c.clusteriness = fs::path(clusteriness_path);
      if (!strategy.empty()) c.strategy = parse_strategy(strategy);
      return resolve_clusteriness(c);
    };

    if (*prep) {
      auto config = prep_flags.build();
      error_dir = config.out;
      Workspace::prepare(config);
    } else if (*pipeline) {
      auto config = pipeline_flags.build();
      error_dir = config.out;
      try {
        run_pipeline(config);
      } catch (const StageError& e) {
        stage = e.stage();
        throw;
      }
    } else if (*train) {
      const auto ws = Workspace::open(out);
      auto ids = members_of(ws, member);
      std::vector<std::thread> threads;
      std::vector<std::optional<Error>> failures(ids.size());
      std::atomic<std::size_t> next{0};
      auto worker = [&] {
        for (std::size_t i = next++; i < ids.size(); i = next++) {
          try {
            run_train(ws, ids[i]);
          } catch (const Error& e) {
            failures[i] = e;
          }
        }
      };
      for (std::size_t t = 1; t < std::min(jobs, ids.size()); ++t) threads.emplace_back(worker);
      worker();
      for (auto& t : threads) t.join();
      for (const auto& f : failures) {
        if (f) throw *f;
      }
    } else if (*score) {
      const auto ws = Workspace::open(out);
      for (auto m : members_of(ws, member)) run_score(ws, m);
    } else if (*combine) {
      run_combine(Workspace::open(out));
    } else if (*cluster) {
      const auto ws = Workspace::open(out);
      run_cluster(ws, cluster_config(ws));
    } else if (*eval) {
      const auto ws = Workspace::open(out);
      for (const auto& r : run_eval(ws, truth)) {
        std::printf("%s F=%.5f R=%.5f P=%.5f MAP=%s\n", r.problem_id.c_str(), r.bcubed.f,
                    r.bcubed.recall, r.bcubed.precision,
                    r.map ? std::to_string(*r.map).c_str() : "NA");
      }
    } else if (*report) {
      const auto ws = Workspace::open(out);
      std::fputs(report_csv(run_report(ws, truth, cluster_config(ws))).c_str(), stdout);
    } else if (*baseline) {
      const auto rows = run_baseline(truth, shuffles, seed, out);
      for (const auto& r : rows) {
        std::printf("%s random_map=%s coward_f=%.5f\n", r.problem_id.c_str(),
                    r.random_map ? std::to_string(*r.random_map).c_str() : "NA", r.coward_f);
      }
    } else if (*synth) {
      const auto paths = write_synthetic_corpus(synth_spec, out);
      std::printf("corpus %s\ncontrols %s\ntruth %s\n", paths.corpus.c_str(),
                  paths.controls.c_str(), paths.truth.c_str());
    }
  } catch (const Error& e) {
    report_error(stage, e, error_dir);
    return 1;
  } catch (const std::exception& e) {
    report_error(stage, Error(ErrorCode::IoError, e.what()), error_dir);
    return 1;
  }
  return 0;
}
