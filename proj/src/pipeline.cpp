#include "mhrnn/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "mhrnn/log.hpp"

namespace fs = std::filesystem;

namespace mhrnn {
namespace {

constexpr const char* kToolVersion = "1.0.0";
constexpr const char* kWorkspaceFile = "workspace.json";

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::CorruptFile, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string fmt(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string fmt(const std::optional<double>& x, int digits) {
  return x ? fmt(*x, digits) : "NA";
}

fs::path resolve(const fs::path& p, const fs::path& base) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::optional<fs::path> optional_path(const nlohmann::json& j, const char* key,
                                      const fs::path& base) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return resolve(j.at(key).get<std::string>(), base);
}

// Per-language member rows: hidden size, PSN, leak numerator over
// heads, over-fit epochs, direction, word DF threshold (0 = none).
struct PaperRow {
  std::size_t size;
  double psn;
  double leak_over_heads;
  std::size_t overfit;
  Direction direction;
  double df;
};

std::vector<PaperRow> rows_for(std::string_view language) {
  using enum Direction;
  if (language == "nl") {
    return {{299, 0.5, 1.0 / 2, 4, forward, 0},
            {159, 0.3, 1.0 / 3, 2, forward, 0},
            {139, 0.3, 1.0 / 2, 4, reverse, 0.005},
            {99, 0.5, 1.0 / 2, 3, forward, 0.01},
            {139, 0.3, 1.0 / 2, 5, reverse, 0}};
  }
  if (is_greek_language(language)) {
    return {{299, 0.3, 1.0 / 2, 3, forward, 0.005},
            {279, 0.5, 1.0 / 2, 4, forward, 0},
            {159, 0.3, 1.0 / 3, 5, reverse, 0},
            {159, 1.0, 1.0 / 2, 3, forward, 0.005},
            {139, 0.3, 1.0 / 2, 5, reverse, 0}};
  }
  return {{299, 0.5, 1.0 / 2, 4, forward, 0},
          {139, 0.3, 1.0 / 2, 5, reverse, 0},
          {239, 1.0, 1.0 / 3, 2, reverse, 0.005},
          {139, 0.3, 1.0 / 2, 5, forward, 0.01},
          {159, 0.5, 1.0 / 2, 2, forward, 0}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

nlohmann::json MemberSpec::to_json() const {
  auto j = hyper.to_json();
  j["leak_over_heads"] = leak_over_heads ? nlohmann::json(*leak_over_heads) : nlohmann::json();
  return j;
}

MemberSpec MemberSpec::from_json(const nlohmann::json& j) {
  MemberSpec m;
  m.hyper = Hyperparameters::from_json(j);
  m.seed_given = j.contains("seed");
  if (j.contains("leak_over_heads") && !j.at("leak_over_heads").is_null()) {
    m.leak_over_heads = j.at("leak_over_heads").get<double>();
    if (!(*m.leak_over_heads >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "leak_over_heads must be nonnegative");
    }
  }
  return m;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : ensemble) members.push_back(m.to_json());
  auto opt = [](const std::optional<fs::path>& p) {
    return p ? nlohmann::json(p->string()) : nlohmann::json();
  };
  return {
      {"corpus", corpus.string()},
      {"controls", controls.string()},
      {"out", out.string()},
      {"truth", truth.empty() ? nlohmann::json() : nlohmann::json(truth.string())},
      {"clusteriness", opt(clusteriness)},
      {"equivalences", opt(equivalences)},
      {"strategy", strategy ? nlohmann::json(to_string(*strategy)) : nlohmann::json()},
      {"language", language},
      {"n_controls", n_controls},
      {"seed", seed},
      {"min_frequency", min_frequency},
      {"jobs", jobs},
      {"max_problem_docs", max_problem_docs},
      {"ensemble", members},
  };
}

RunConfig RunConfig::from_json(const nlohmann::json& input, const fs::path& base_dir) {
  // A run manifest nests the resolved configuration.
  const auto& j = input.contains("config") ? input.at("config") : input;
  RunConfig c;
  try {
    c.corpus = resolve(j.value("corpus", ""), base_dir);
    c.controls = resolve(j.value("controls", ""), base_dir);
    c.out = resolve(j.value("out", ""), base_dir);
    if (auto t = optional_path(j, "truth", base_dir)) c.truth = *t;
    c.clusteriness = optional_path(j, "clusteriness", base_dir);
    c.equivalences = optional_path(j, "equivalences", base_dir);
    if (j.contains("strategy") && !j.at("strategy").is_null()) {
      c.strategy = parse_strategy(j.at("strategy").get<std::string>());
    }
    c.language = j.value("language", c.language);
    c.n_controls = j.value("n_controls", c.n_controls);
    c.seed = j.value("seed", c.seed);
    c.min_frequency = j.value("min_frequency", c.min_frequency);
    c.jobs = j.value("jobs", c.jobs);
    c.max_problem_docs = j.value("max_problem_docs", c.max_problem_docs);
    if (j.contains("ensemble")) {
      for (const auto& m : j.at("ensemble")) c.ensemble.push_back(MemberSpec::from_json(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("run config: ") + e.what());
  }
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  return from_json(read_json(path), path.parent_path());
}

std::vector<MemberSpec> default_ensemble(std::string_view language, std::size_t total_symbols) {
  const double scale = std::min(1.0, static_cast<double>(total_symbols) / 1e6);
  std::vector<MemberSpec> members;
  for (const auto& row : rows_for(language)) {
    MemberSpec m;
    m.hyper.hidden_size = std::max<std::size_t>(
        16, static_cast<std::size_t>(std::lround(static_cast<double>(row.size) * scale)));
    m.hyper.psn = row.psn;
    m.hyper.overfit_epochs = row.overfit;
    m.hyper.direction = row.direction;
    if (row.df > 0) m.hyper.df_threshold = row.df;
    m.leak_over_heads = row.leak_over_heads;
    members.push_back(m);
  }
  return members;
}

// ---------------------------------------------------------------------------
// Workspace

namespace {

void load_inputs(const RunConfig& c, Collection& collection, std::vector<Document>& controls,
                 EquivalenceClasses& classes) {
  collection = load_collection(c.corpus, c.language, c.max_problem_docs);
  controls = c.n_controls > 0 ? load_controls(c.controls, c.n_controls, c.seed)
                              : std::vector<Document>{};
  classes = c.equivalences ? EquivalenceClasses::load(*c.equivalences)
                           : EquivalenceClasses::defaults();
}

}  // namespace

Workspace Workspace::prepare(RunConfig config) {
  if (config.out.empty()) throw Error(ErrorCode::InvalidArgument, "an output directory is required");
  for (auto* p : {&config.corpus, &config.controls, &config.out, &config.truth}) {
    if (!p->empty()) *p = fs::absolute(*p);
  }
  if (config.clusteriness) config.clusteriness = fs::absolute(*config.clusteriness);
  if (config.equivalences) config.equivalences = fs::absolute(*config.equivalences);
  fs::create_directories(config.out);

  Workspace ws;
  load_inputs(config, ws.collection_, ws.controls_, ws.classes_);
  const auto texts =
      prepare_texts(ws.collection_.documents, ws.controls_, config.language, std::nullopt,
                    ws.classes_);
  std::size_t total = 0;
  for (const auto& t : texts) total += t.tokens.size();

  if (config.ensemble.empty()) config.ensemble = default_ensemble(config.language, total);
  bool masking = false;
  for (std::size_t i = 0; i < config.ensemble.size(); ++i) {
    auto& m = config.ensemble[i];
    if (!m.seed_given) {
      m.hyper.seed = derive_seed(config.seed, 100 + i);
      m.seed_given = true;
    }
    masking = masking || m.hyper.df_threshold.has_value();
  }
  ws.alphabet_ = build_alphabet(texts, config.min_frequency, config.language, masking);
  ws.config_ = std::move(config);

  ws.alphabet_.save(ws.config_.out / "alphabet.json");
  write_json(ws.config_.out / kWorkspaceFile, ws.config_.to_json());
  log::info("prepared " + std::to_string(ws.collection_.documents.size()) + " problem texts, " +
            std::to_string(ws.controls_.size()) + " controls, alphabet of " +
            std::to_string(ws.alphabet_.size()));
  return ws;
}

Workspace Workspace::open(const fs::path& out) {
  const fs::path file = out / kWorkspaceFile;
  if (!fs::exists(file)) {
    throw Error(ErrorCode::MissingDirectory, out.string() + " has not been prepared (no " +
                                                 std::string(kWorkspaceFile) + ")");
  }
  Workspace ws;
  ws.config_ = RunConfig::from_json(read_json(file));
  ws.config_.out = fs::absolute(out);
  load_inputs(ws.config_, ws.collection_, ws.controls_, ws.classes_);
  ws.alphabet_ = Alphabet::load(out / "alphabet.json");
  return ws;
}

Hyperparameters Workspace::member_hyper(std::size_t member) const {
  if (member >= config_.ensemble.size()) {
    throw Error(ErrorCode::InvalidArgument, "no ensemble member " + std::to_string(member));
  }
  const auto& spec = config_.ensemble[member];
  Hyperparameters h = spec.hyper;
  if (spec.leak_over_heads) {
    std::set<std::string_view> seen;
    for (const auto& d : collection_.documents) seen.insert(d.raw);
    std::size_t heads = collection_.documents.size();
    for (const auto& c : controls_) heads += seen.insert(c.raw).second ? 1 : 0;
    h.leak = std::min(1.0, *spec.leak_over_heads / static_cast<double>(heads));
  }
  return h;
}

TrainingSet Workspace::training_set(const Hyperparameters& hyper) const {
  return assemble(collection_.problems, collection_.documents, controls_, alphabet_,
                  hyper.df_threshold, hyper.direction == Direction::reverse, classes_);
}

fs::path Workspace::model_path(std::size_t m) const {
  return config_.out / "models" / ("member" + std::to_string(m) + ".model");
}
fs::path Workspace::log_path(std::size_t m) const {
  return config_.out / "models" / ("member" + std::to_string(m) + ".log.json");
}
fs::path Workspace::matrix_path(std::size_t m) const {
  return config_.out / "matrices" / ("member" + std::to_string(m) + ".json");
}
fs::path Workspace::combined_path() const { return config_.out / "matrices" / "combined.json"; }
fs::path Workspace::problem_dir(const Problem& p) const { return config_.out / p.problem_id; }

// ---------------------------------------------------------------------------
// Stages

TrainingLog run_train(const Workspace& ws, std::size_t member) {
  const auto hyper = ws.member_hyper(member);
  const auto set = ws.training_set(hyper);
  Model model = init_model(ws.alphabet().size(), set.n_heads(), hyper);
  for (const auto& d : set.documents) model.head_ids.push_back(d.doc_id);
  model.alphabet_hash = ws.alphabet().hash();

  log::info("member " + std::to_string(member) + ": training " + std::to_string(set.n_heads()) +
            " heads, hidden " + std::to_string(hyper.hidden_size));
  auto result = train(std::move(model), set.documents, hyper);
  fs::create_directories(ws.model_path(member).parent_path());
  save_model(result.model, ws.model_path(member));
  write_json(ws.log_path(member), result.log.to_json());
  return result.log;
}

EntropyMatrix run_score(const Workspace& ws, std::size_t member) {
  const Model model = load_model(ws.model_path(member));
  if (model.alphabet_hash != ws.alphabet().hash()) {
    throw Error(ErrorCode::IdMismatch, "model was trained with a different alphabet");
  }
  const auto set = ws.training_set(model.hyper());
  if (model.head_ids != [&] {
        std::vector<std::string> ids;
        for (const auto& d : set.documents) ids.push_back(d.doc_id);
        return ids;
      }()) {
    throw Error(ErrorCode::IdMismatch, "model heads do not match the training set");
  }
  const std::span<const EncodedDoc> texts(set.documents.data(), set.n_problem_docs());
  auto matrix = score_all(model, texts);
  fs::create_directories(ws.matrix_path(member).parent_path());
  matrix.save(ws.matrix_path(member));
  return matrix;
}

EntropyMatrix run_combine(const Workspace& ws) {
  std::vector<EntropyMatrix> matrices;
  for (std::size_t m = 0; m < ws.config().ensemble.size(); ++m) {
    matrices.push_back(EntropyMatrix::load(ws.matrix_path(m)));
  }
  auto combined = ensemble_sum(matrices);
  combined.save(ws.combined_path());
  return combined;
}

ClusterinessConfig resolve_clusteriness(const RunConfig& config) {
  auto c = config.clusteriness ? ClusterinessConfig::load(*config.clusteriness)
                               : ClusterinessConfig();
  if (config.strategy) c.override_strategy(*config.strategy);
  return c;
}

void run_cluster(const Workspace& ws, const ClusterinessConfig& config) {
  const auto combined = EntropyMatrix::load(ws.combined_path());
  std::set<std::string> problem_ids;
  for (const auto& d : ws.collection().documents) problem_ids.insert(d.doc_id);
  std::vector<std::size_t> control_heads;
  for (std::size_t h = 0; h < combined.head_ids.size(); ++h) {
    if (!problem_ids.count(combined.head_ids[h])) control_heads.push_back(h);
  }

  for (const auto& problem : ws.collection().problems) {
    const auto dir = ws.problem_dir(problem);
    fs::create_directories(dir);
    const auto normalized = normalize_by_controls(combined, control_heads, problem);
    const auto affinity = to_affinity(normalized, problem.filenames);
    affinity.save(dir / "affinity.json");
    diagonal_dominance(affinity);

    RankedLinks links;
    if (affinity.size() >= 2) links = rank_links(affinity);
    write_text(dir / "ranking.json", links.to_json().dump(2) + "\n");
    cluster_problem(affinity, config, problem.language, problem.genre).save(dir / "clustering.json");
  }
}

Partition load_truth(const fs::path& truth_root, const std::string& problem_id) {
  const fs::path path = truth_root / problem_id / "clustering.json";
  if (!fs::exists(path)) throw Error(ErrorCode::MissingTruth, "no truth file " + path.string());
  return Partition::load(path);
}

std::vector<ScoreReport> run_eval(const Workspace& ws, const fs::path& truth_root) {
  std::vector<ScoreReport> reports;
  std::string csv = "problem,F(BCubed),R-BCubed,P-BCubed,MAP\n";
  for (const auto& problem : ws.collection().problems) {
    const auto truth = load_truth(truth_root, problem.problem_id);
    const auto dir = ws.problem_dir(problem);
    ScoreReport r;
    r.problem_id = problem.problem_id;
    r.bcubed = bcubed(Partition::load(dir / "clustering.json"), truth);
    const auto links = RankedLinks::from_json(read_json(dir / "ranking.json"), problem.filenames);
    try {
      r.map = map_score(links, truth);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoTrueLinks) throw;
    }
    csv += r.problem_id + "," + fmt(r.bcubed.f, 5) + "," + fmt(r.bcubed.recall, 5) + "," +
           fmt(r.bcubed.precision, 5) + "," + fmt(r.map, 5) + "\n";
    reports.push_back(std::move(r));
  }
  write_text(ws.config().out / "eval.csv", csv);
  return reports;
}

std::vector<ReportRow> run_report(const Workspace& ws, const fs::path& truth_root,
                                  const ClusterinessConfig& config) {
  std::vector<ReportRow> rows;
  for (const auto& problem : ws.collection().problems) {
    const auto truth = load_truth(truth_root, problem.problem_id);
    const auto dir = ws.problem_dir(problem);
    const auto affinity = AffinityMatrix::load(dir / "affinity.json");
    const auto& entry = config.lookup(problem.language, problem.genre);

    ReportRow row;
    row.language = problem.language;
    row.genre = problem.genre;
    row.problem_id = problem.problem_id;
    try {
      row.map = map_score(
          RankedLinks::from_json(read_json(dir / "ranking.json"), problem.filenames), truth);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoTrueLinks) throw;
    }
    row.coward = bcubed(cowardly(affinity.doc_ids), truth).f;
    row.c_fixed = entry.c;
    row.fixed = bcubed(cluster_with(affinity, entry.strategy, entry.c), truth).f;

    // Sweep c over [0, 1] in steps of 0.01 with the anchors computed once.
    std::optional<Anchors> anchors;
    if (affinity.size() >= 2 && entry.strategy != Strategy::cowardly) {
      try {
        anchors = find_anchors(affinity, entry.strategy);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateAnchors) throw;
      }
    }
    row.best = row.coward;
    row.c_best = 0.0;
    for (int step = 0; step <= 100; ++step) {
      const double c = step / 100.0;
      const double f =
          anchors ? bcubed(run_strategy(entry.strategy, affinity,
                                        clusteriness_threshold(*anchors, c)),
                           truth)
                        .f
                  : row.coward;
      if (f >= row.best) {
        row.best = f;
        row.c_best = c;
      }
    }
    rows.push_back(std::move(row));
  }
  write_text(ws.config().out / "report.csv", report_csv(rows));
  return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
  std::string csv = "Lang/genre,problem,MAP,coward,best,c_b,diff,fixed,c_f,diff\n";
  for (const auto& r : rows) {
    csv += r.language + " " + r.genre + "," + r.problem_id + "," + fmt(r.map, 3) + "," +
           fmt(r.coward, 3) + "," + fmt(r.best, 3) + "," + fmt(r.c_best, 2) + "," +
           fmt(r.best - r.coward, 3) + "," + fmt(r.fixed, 3) + "," + fmt(r.c_fixed, 2) + "," +
           fmt(r.fixed - r.coward, 3) + "\n";
  }
  return csv;
}

std::vector<BaselineRow> run_baseline(const fs::path& truth_root, std::size_t shuffles,
                                      std::uint64_t seed, const fs::path& out) {
  if (!fs::is_directory(truth_root)) {
    throw Error(ErrorCode::MissingDirectory, "truth directory not found: " + truth_root.string());
  }
  std::vector<std::string> problems;
  for (const auto& entry : fs::directory_iterator(truth_root)) {
    if (entry.is_directory() && fs::exists(entry.path() / "clustering.json")) {
      problems.push_back(entry.path().filename().string());
    }
  }
  std::sort(problems.begin(), problems.end());
  if (problems.empty()) throw Error(ErrorCode::MissingTruth, "no truth files under " + truth_root.string());

  std::vector<BaselineRow> rows;
  std::string csv = "problem,random MAP,zero-effort F(BCubed),zero-effort MAP\n";
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t p = 0; p < problems.size(); ++p) {
    const auto truth = load_truth(truth_root, problems[p]);
    BaselineRow row;
    row.problem_id = problems[p];
    row.coward_f = bcubed(cowardly(truth.doc_ids), truth).f;
    try {
      row.random_map = random_map_baseline(truth, shuffles, derive_seed(seed, p)).mean;
      if (truth.doc_ids.size() >= 2) {
        const auto zero = zero_effort_baseline(truth.doc_ids, derive_seed(seed, 1000 + p));
        row.zero_effort_map = map_score(zero.links, truth);
      }
      sum += *row.random_map;
      ++counted;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoTrueLinks) throw;
    }
    csv += row.problem_id + "," + fmt(row.random_map, 5) + "," + fmt(row.coward_f, 5) + "," +
           fmt(row.zero_effort_map, 5) + "\n";
    rows.push_back(std::move(row));
  }
  csv += "mean," +
         fmt(counted ? std::optional<double>(sum / static_cast<double>(counted)) : std::nullopt, 5) +
         ",,\n";
  if (!out.empty()) {
    fs::create_directories(out);
    write_text(out / "baseline.csv", csv);
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(name, e);
  }
}

}  // namespace

void run_pipeline(const RunConfig& config) {
  const std::string started = timestamp();
  auto ws = stage("prep", [&] { return Workspace::prepare(config); });
  const std::size_t members = ws.config().ensemble.size();

  std::vector<TrainingLog> logs(members);
  std::vector<std::exception_ptr> failures(members);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t m = next++; m < members; m = next++) {
      try {
        if (ws.config().resume && fs::exists(ws.model_path(m)) && fs::exists(ws.log_path(m))) {
          log::info("member " + std::to_string(m) + ": reusing existing model");
          const auto j = read_json(ws.log_path(m));
          logs[m].best_epoch = j.value("best_epoch", std::size_t{0});
          logs[m].stop_reason = j.value("stop_reason", "");
          for (const auto& e : j.at("epochs")) {
            logs[m].epochs.push_back({e.at("epoch"), e.at("training_bits"),
                                      e.at("validation_bits"), e.at("leak_rate")});
          }
        } else {
          logs[m] = stage("train", [&] { return run_train(ws, m); });
        }
        stage("score", [&] { return run_score(ws, m); });
      } catch (...) {
        failures[m] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(ws.config().jobs, 1, members);
  std::vector<std::thread> threads;
  for (std::size_t i = 1; i < n_threads; ++i) threads.emplace_back(worker);
  worker();
  for (auto& t : threads) t.join();
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  stage("combine", [&] { return run_combine(ws); });
  const auto clusteriness = stage("cluster", [&] { return resolve_clusteriness(ws.config()); });
  stage("cluster", [&] {
    run_cluster(ws, clusteriness);
    return 0;
  });

  nlohmann::json member_records = nlohmann::json::array();
  for (std::size_t m = 0; m < members; ++m) {
    member_records.push_back({{"index", m},
                              {"hyper", ws.member_hyper(m).to_json()},
                              {"model", ws.model_path(m).string()},
                              {"log", ws.log_path(m).string()},
                              {"matrix", ws.matrix_path(m).string()},
                              {"epochs", logs[m].epochs.size()},
                              {"best_epoch", logs[m].best_epoch},
                              {"stop_reason", logs[m].stop_reason}});
  }
  nlohmann::json manifest = {
      {"config", ws.config().to_json()},
      {"alphabet_hash", ws.alphabet().hash()},
      {"alphabet_size", ws.alphabet().size()},
      {"clusteriness", clusteriness.to_json()},
      {"members", member_records},
      {"combined_matrix", ws.combined_path().string()},
      {"versions", {{"tool", kToolVersion}, {"model_format", kModelFormatVersion}}},
      {"started_at", started},
  };

  if (!ws.config().truth.empty()) {
    stage("eval", [&] { return run_eval(ws, ws.config().truth); });
    stage("report", [&] { return run_report(ws, ws.config().truth, clusteriness); });
  }
  manifest["finished_at"] = timestamp();
  write_json(ws.config().out / "manifest.json", manifest);
}

}  // namespace mhrnn
