#include <doctest.h>

#include <set>

#include "mhrnn/corpus.hpp"
#include "mhrnn/error.hpp"
#include "mhrnn/log.hpp"
#include "support/helpers.hpp"

using namespace mhrnn;
using testing::TempDir;
using testing::write_file;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::IoError;
}

}  // namespace

TEST_CASE("load_collection: shared documents are stored once") {
  TempDir dir;
  write_file(dir / "p1/a.txt", "shared text");
  write_file(dir / "p1/b.txt", "only in one");
  write_file(dir / "p2/c.txt", "shared text");
  write_file(dir / "p2/d.txt", "only in two");
  const auto c = load_collection(dir.path(), "en");
  REQUIRE(c.problems.size() == 2);
  CHECK(c.documents.size() == 3);
  CHECK(c.problems[0].doc_ids[0] == c.problems[1].doc_ids[0]);
  CHECK(c.problems[1].filenames[0] == "c.txt");
  std::size_t referenced = 0;
  for (const auto& p : c.problems) referenced += p.doc_ids.size();
  CHECK(referenced >= c.documents.size());
  CHECK(c.problems[0].language == "en");
}

TEST_CASE("load_collection: manifest order, language and genre") {
  TempDir dir;
  write_file(dir / "zz/a.txt", "one");
  write_file(dir / "aa/a.txt", "two");
  write_file(dir / "collection.json",
             R"([{"problem_id":"zz","language":"nl","genre":"reviews"},
                 {"problem_id":"aa","language":"gr","genre":"articles"}])");
  const auto c = load_collection(dir.path());
  REQUIRE(c.problems.size() == 2);
  CHECK(c.problems[0].problem_id == "zz");
  CHECK(c.problems[0].language == "nl");
  CHECK(c.problems[1].genre == "articles");
}

TEST_CASE("load_collection: errors") {
  TempDir dir;
  CHECK(code_of([&] { load_collection(dir / "missing"); }) == ErrorCode::MissingDirectory);

  std::filesystem::create_directories(dir / "empty/p1");
  CHECK(code_of([&] { load_collection(dir / "empty"); }) == ErrorCode::EmptyProblem);

  write_file(dir / "bad/p1/x.txt", std::string("ok\xff\xfe", 4));
  CHECK(code_of([&] { load_collection(dir / "bad"); }) == ErrorCode::NonUtf8File);

  for (int i = 0; i < 4; ++i) write_file(dir / ("big/p/" + std::to_string(i) + ".txt"), "t" + std::to_string(i));
  CHECK(code_of([&] { load_collection(dir / "big", "en", 3); }) == ErrorCode::TooManyDocuments);
}

TEST_CASE("load_controls: deterministic sample") {
  TempDir dir;
  for (int i = 0; i < 100; ++i) write_file(dir / ("c" + std::to_string(i) + ".txt"), "text " + std::to_string(i));
  const auto a = load_controls(dir.path(), 80, 5);
  const auto b = load_controls(dir.path(), 80, 5);
  REQUIRE(a.size() == 80);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].doc_id == b[i].doc_id);
    CHECK(a[i].role == DocRole::control);
  }
  std::set<std::string> unique;
  for (const auto& d : a) unique.insert(d.doc_id);
  CHECK(unique.size() == 80);
  CHECK(load_controls(dir.path(), 0, 5).empty());
  CHECK(code_of([&] { load_controls(dir.path(), 101, 5); }) == ErrorCode::InsufficientControls);
}

TEST_CASE("assemble: heads, controls and direction") {
  TempDir dir;
  write_file(dir / "corpus/p1/a.txt", "Some words here.");
  write_file(dir / "corpus/p1/b.txt", "Other words there.");
  write_file(dir / "corpus/p2/c.txt", "Some words here.");
  write_file(dir / "ctl/x.txt", "A control text.");
  write_file(dir / "ctl/y.txt", "Other words there.");  // duplicates a problem document
  const auto c = load_collection(dir / "corpus", "en");
  const auto controls = load_controls(dir / "ctl", 2, 1);
  const auto texts = prepare_texts(c.documents, controls, "en", std::nullopt);
  const auto alphabet = build_alphabet(texts, 1e-4, "en");

  auto prev = log::set_sink([](log::Level, const std::string&) {});
  const auto set = assemble(c.problems, c.documents, controls, alphabet, std::nullopt, false);
  CHECK(set.n_heads() == 3);  // a, b and the one non-duplicate control
  CHECK(set.controls == std::vector<std::size_t>{2});
  CHECK(set.n_problem_docs() == 2);
  for (const auto& [id, head] : set.head_of) CHECK(set.documents[head].doc_id == id);
  for (const auto& d : set.documents) {
    CHECK_FALSE(d.reversed);
    for (auto s : d.symbols) CHECK(s < alphabet.size());
  }
  const auto rare = alphabet.id_of(kRareWordToken);
  CHECK_FALSE(rare.has_value());

  const auto rev = assemble(c.problems, c.documents, controls, alphabet, std::nullopt, true);
  log::set_sink(prev);
  for (std::size_t h = 0; h < rev.n_heads(); ++h) {
    CHECK(rev.documents[h].reversed);
    auto s = rev.documents[h].symbols;
    std::reverse(s.begin(), s.end());
    CHECK(s == set.documents[h].symbols);
  }
}
