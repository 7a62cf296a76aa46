#include <doctest.h>

#include <cstdlib>
#include <sstream>

#include "mhrnn/error.hpp"
#include "mhrnn/log.hpp"
#include "mhrnn/pipeline.hpp"
#include "mhrnn/synthetic.hpp"
#include "support/helpers.hpp"

using namespace mhrnn;
using testing::read_file;
using testing::TempDir;

namespace {

struct QuietLog {
  log::Sink prev = log::set_sink([](log::Level, const std::string&) {});
  ~QuietLog() { log::set_sink(prev); }
};

SyntheticCorpusPaths small_corpus(const TempDir& dir, std::size_t problems = 2) {
  SyntheticCorpusSpec spec;
  spec.problems = problems;
  spec.authors = 3;
  spec.docs_per_author = 2;
  spec.doc_length = 300;
  spec.controls = 4;
  spec.seed = 5;
  return write_synthetic_corpus(spec, dir / "data");
}

RunConfig small_config(const SyntheticCorpusPaths& paths, const std::filesystem::path& out) {
  RunConfig c;
  c.corpus = paths.corpus;
  c.controls = paths.controls;
  c.truth = paths.truth;
  c.out = out;
  c.n_controls = 4;
  c.jobs = 2;
  for (auto dir : {Direction::forward, Direction::reverse}) {
    MemberSpec m;
    m.hyper.hidden_size = 8;
    m.hyper.max_epochs = 3;
    m.hyper.direction = dir;
    m.leak_over_heads = 0.5;
    c.ensemble.push_back(m);
  }
  c.ensemble[1].hyper.df_threshold = 0.2;
  return c;
}

}  // namespace

TEST_CASE("default ensemble has five members scaled to the corpus") {
  const auto full = default_ensemble("en", 5'000'000);
  REQUIRE(full.size() == 5);
  CHECK(full[0].hyper.hidden_size == 299);
  CHECK(full[2].hyper.direction == Direction::reverse);
  CHECK(full[2].hyper.df_threshold == 0.005);
  CHECK(*full[2].leak_over_heads == doctest::Approx(1.0 / 3));
  const auto small = default_ensemble("gr", 100'000);
  CHECK(small[0].hyper.hidden_size == 30);
  CHECK(default_ensemble("en", 10)[0].hyper.hidden_size == 16);
  CHECK(default_ensemble("nl", 1'000'000)[3].hyper.hidden_size == 99);
}

TEST_CASE("run config JSON round trip") {
  RunConfig c;
  c.corpus = "/c";
  c.controls = "/k";
  c.out = "/o";
  c.strategy = Strategy::single_link;
  c.ensemble = default_ensemble("nl", 1000);
  const auto back = RunConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());
  const auto rel = RunConfig::from_json({{"corpus", "c"}, {"out", "o"}}, "/base");
  CHECK(rel.corpus == "/base/c");
}

TEST_CASE("pipeline writes outputs, is deterministic, and reruns from its manifest") {
  QuietLog quiet;
  TempDir dir;
  const auto paths = small_corpus(dir);
  const auto config = small_config(paths, dir / "run1");
  run_pipeline(config);

  const auto c = load_collection(paths.corpus);
  for (const auto& p : c.problems) {
    const auto part = Partition::load(dir / ("run1/" + p.problem_id + "/clustering.json"));
    CHECK(part.is_valid());
    auto got = part.doc_ids, want = p.filenames;
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    CHECK(got == want);
    const auto ranking = nlohmann::json::parse(read_file(dir / ("run1/" + p.problem_id + "/ranking.json")));
    CHECK(ranking.size() == p.filenames.size() * (p.filenames.size() - 1) / 2);
  }
  CHECK(std::filesystem::exists(dir / "run1/report.csv"));
  CHECK(std::filesystem::exists(dir / "run1/eval.csv"));

  // the manifest alone reproduces the run
  auto manifest = nlohmann::json::parse(read_file(dir / "run1/manifest.json"));
  manifest["config"]["out"] = (dir / "run2").string();
  run_pipeline(RunConfig::from_json(manifest));
  for (const auto& p : c.problems) {
    for (auto f : {"clustering.json", "ranking.json", "affinity.json"}) {
      CHECK(read_file(dir / ("run1/" + p.problem_id + "/" + f)) ==
            read_file(dir / ("run2/" + p.problem_id + "/" + f)));
    }
  }
  CHECK(read_file(dir / "run1/matrices/combined.json") == read_file(dir / "run2/matrices/combined.json"));

  // resume reuses the models and gives the same answer
  auto resumed = config;
  resumed.resume = true;
  const auto before = read_file(dir / "run1/matrices/combined.json");
  run_pipeline(resumed);
  CHECK(read_file(dir / "run1/matrices/combined.json") == before);
}

TEST_CASE("report columns and sweep bounds") {
  QuietLog quiet;
  TempDir dir;
  const auto paths = small_corpus(dir, 1);
  run_pipeline(small_config(paths, dir / "run"));
  const auto ws = Workspace::open(dir / "run");
  const auto rows = run_report(ws, paths.truth, resolve_clusteriness(ws.config()));
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].best >= rows[0].fixed);
  CHECK(rows[0].best >= rows[0].coward);
  CHECK(rows[0].fixed >= 0.0);
  const auto csv = read_file(dir / "run/report.csv");
  CHECK(csv.rfind("Lang/genre,problem,MAP,coward,best,c_b,diff,fixed,c_f,diff\n", 0) == 0);

  try {
    run_report(ws, dir / "nowhere", resolve_clusteriness(ws.config()));
    FAIL("expected MissingTruth");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingTruth);
  }
}

TEST_CASE("baseline table") {
  TempDir dir;
  const auto paths = small_corpus(dir);
  const auto rows = run_baseline(paths.truth, 50, 1, dir / "b");
  CHECK(rows.size() == 2);
  for (const auto& r : rows) {
    REQUIRE(r.random_map.has_value());
    CHECK(*r.random_map > 0.0);
    CHECK(r.coward_f > 0.0);
  }
  CHECK(std::filesystem::exists(dir / "b/baseline.csv"));
}

#ifdef MHRNN_CLI
TEST_CASE("cli: stage commands and machine-readable errors") {
  TempDir dir;
  const std::string cli = MHRNN_CLI;
  auto run = [&](const std::string& args) {
    return std::system((cli + " " + args + " > /dev/null 2> " + (dir / "stderr.txt").string()).c_str());
  };
  REQUIRE(run("synth --out " + (dir / "d").string() + " --authors 2 --docs-per-author 2 --length 200 --n-controls 3") == 0);
  const std::string out = (dir / "o").string();
  REQUIRE(run("prep --corpus " + (dir / "d/corpus").string() + " --controls " +
              (dir / "d/controls").string() + " --n-controls 3 --out " + out + " --reverse") == 0);
  CHECK(run("train --out " + out + " --member 0") == 0);
  CHECK(run("score --out " + out) == 0);
  CHECK(run("combine --out " + out) == 0);
  CHECK(run("cluster --out " + out + " --strategy single_link") == 0);
  CHECK(run("eval --out " + out + " --truth " + (dir / "d/truth").string()) == 0);
  CHECK(std::filesystem::exists(dir / "o/problem001/clustering.json"));

  CHECK(run("pipeline --corpus " + (dir / "missing").string() + " --n-controls 0 --out " +
            (dir / "e").string()) != 0);
  const auto err = nlohmann::json::parse(read_file(dir / "e/error.json"));
  CHECK(err["error"] == "MissingDirectory");
  CHECK(err["stage"] == "prep");
  CHECK(nlohmann::json::parse(read_file(dir / "stderr.txt"))["error"] == "MissingDirectory");
}
#endif
