#include <doctest.h>

#include <cmath>

#include "mhrnn/affinity.hpp"
#include "mhrnn/error.hpp"
#include "mhrnn/log.hpp"
#include "support/helpers.hpp"

using namespace mhrnn;

namespace {

// heads 0..2 are problem docs p0..p2, heads 3..4 are controls
EntropyMatrix sample_matrix() {
  EntropyMatrix m;
  m.head_ids = {"p0", "p1", "p2", "c0", "c1"};
  m.text_ids = {"p0", "p1", "p2"};
  m.values = Matrix(5, 3);
  const double v[5][3] = {{1, 4, 3}, {5, 2, 6}, {4, 4, 1}, {3, 5, 2}, {5, 3, 4}};
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 3; ++j) m.values(i, j) = v[i][j];
  return m;
}

Problem sample_problem() { return {"p", {"p0", "p1", "p2"}, {"a", "b", "c"}, "en", "x"}; }

const std::vector<std::size_t> kControls = {3, 4};

}  // namespace

TEST_CASE("normalize_by_controls: hand arithmetic") {
  const auto n = normalize_by_controls(sample_matrix(), kControls, sample_problem());
  // column means over controls: (4, 4, 3)
  const double expect[3][3] = {{-3, 0, 0}, {1, -2, 3}, {0, 0, -2}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) CHECK(n(i, j) == expect[i][j]);
}

TEST_CASE("normalize_by_controls: constant offsets") {
  auto m = sample_matrix();
  for (int j = 0; j < 3; ++j) {
    for (int c : {3, 4}) m.values(c, j) = m.values(0, j);
  }
  for (int i = 1; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m.values(i, j) = m.values(0, j);
  auto z = normalize_by_controls(m, kControls, sample_problem());
  for (double x : z.values) CHECK(x == 0.0);

  for (int j = 0; j < 3; ++j) {
    for (int c : {3, 4}) m.values(c, j) = m.values(0, j) + 1;
  }
  z = normalize_by_controls(m, kControls, sample_problem());
  for (double x : z.values) CHECK(x == -1.0);
}

TEST_CASE("normalize_by_controls: adding a constant to a column changes nothing") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto m = sample_matrix();
    for (auto& x : m.values.values) x = rng.uniform(0, 8);
    const auto before = normalize_by_controls(m, kControls, sample_problem());
    const std::size_t col = rng.below(3);
    const double c = 0.5;  // exactly representable shift
    for (std::size_t h = 0; h < 5; ++h) m.values(h, col) += c;
    const auto after = normalize_by_controls(m, kControls, sample_problem());
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(after(i, col) - before(i, col)) < 1e-12);
  }
}

TEST_CASE("normalize_by_controls: errors") {
  const std::vector<std::size_t> none;
  try {
    normalize_by_controls(sample_matrix(), none, sample_problem());
    FAIL("expected NoControls");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoControls);
  }
  const std::vector<std::size_t> overlapping = {0, 3};
  CHECK_THROWS_AS(normalize_by_controls(sample_matrix(), overlapping, sample_problem()), Error);
}

TEST_CASE("to_affinity closed form") {
  const auto zero = to_affinity(Matrix(3, 3), testing::ids(3));
  for (double x : zero.values.values) CHECK(x == 1.0);

  Matrix m(2, 2);
  m(0, 1) = -1;
  m(1, 0) = -1;
  const auto a = to_affinity(m, testing::ids(2));
  CHECK(std::abs(a(0, 1) - std::exp(2.0)) < 1e-12);
  CHECK(std::abs(a(0, 1) - 7.38905609893065) < 1e-12);

  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix r(5, 5);
    for (auto& x : r.values) x = rng.uniform(-3, 3);
    const auto s = to_affinity(r, testing::ids(5));
    for (std::size_t i = 0; i < 5; ++i) {
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(s(i, j) == s(j, i));
        CHECK(s(i, j) > 0.0);
        CHECK(s(i, j) == std::exp(-(r(i, j) + r(j, i))));
      }
    }
  }
}

TEST_CASE("rank_links: scaling, order and degenerate cases") {
  AffinityMatrix a{testing::ids(3), Matrix(3, 3, 9.0)};
  a.values(0, 1) = a.values(1, 0) = 2;
  a.values(0, 2) = a.values(2, 0) = 6;
  a.values(1, 2) = a.values(2, 1) = 4;
  const auto r = rank_links(a);
  REQUIRE(r.links.size() == 3);
  CHECK((r.links[0].a == 0 && r.links[0].b == 2 && r.links[0].weight == 1.0));
  CHECK((r.links[1].a == 1 && r.links[1].b == 2 && r.links[1].weight == 0.5));
  CHECK((r.links[2].a == 0 && r.links[2].b == 1 && r.links[2].weight == 0.0));
  CHECK_FALSE(r.degenerate);

  AffinityMatrix two{testing::ids(2), Matrix(2, 2, 3.0)};
  two.values(0, 1) = two.values(1, 0) = 0.2;
  const auto t = rank_links(two);
  REQUIRE(t.links.size() == 1);
  CHECK(t.links[0].weight == 1.0);
  CHECK(t.degenerate);

  auto prev = log::set_sink([](log::Level, const std::string&) {});
  const auto flat = rank_links(AffinityMatrix{testing::ids(4), Matrix(4, 4, 1.0)});
  log::set_sink(prev);
  CHECK(flat.degenerate);
  for (std::size_t i = 0; i < flat.links.size(); ++i) {
    CHECK(flat.links[i].weight == 0.5);
    if (i > 0) {
      const auto& p = flat.links[i - 1];
      const auto& q = flat.links[i];
      CHECK((p.a < q.a || (p.a == q.a && p.b < q.b)));
    }
  }
}

TEST_CASE("rank_links: monotone transforms keep the order") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = testing::random_affinity(rng, 7);
    auto b = a;
    for (auto& x : b.values.values) x = std::exp(3 * x) + 2;
    const auto ra = rank_links(a), rb = rank_links(b);
    REQUIRE(ra.links.size() == 21);
    CHECK(ra.links.front().weight == 1.0);
    CHECK(ra.links.back().weight == 0.0);
    for (std::size_t i = 0; i < ra.links.size(); ++i) {
      CHECK(ra.links[i].a == rb.links[i].a);
      CHECK(ra.links[i].b == rb.links[i].b);
      if (i > 0) CHECK(ra.links[i].weight <= ra.links[i - 1].weight);
    }
  }
}

TEST_CASE("ranking JSON round trip") {
  Rng rng(9);
  const auto a = testing::random_affinity(rng, 5);
  const auto r = rank_links(a);
  const auto back = RankedLinks::from_json(r.to_json(), a.doc_ids);
  REQUIRE(back.links.size() == r.links.size());
  for (std::size_t i = 0; i < r.links.size(); ++i) {
    CHECK(back.links[i].a == r.links[i].a);
    CHECK(back.links[i].b == r.links[i].b);
    CHECK(back.links[i].weight == r.links[i].weight);
  }
}

TEST_CASE("ensemble_sum") {
  const auto m = sample_matrix();
  const std::vector<EntropyMatrix> one = {m};
  CHECK(ensemble_sum(one).values == m.values);
  const std::vector<EntropyMatrix> five(5, m);
  const auto s = ensemble_sum(five);
  for (std::size_t i = 0; i < m.values.values.size(); ++i) {
    CHECK(s.values.values[i] == 5 * m.values.values[i]);
  }
  auto wrong_ids = m;
  wrong_ids.text_ids[0] = "zz";
  const std::vector<EntropyMatrix> bad_ids = {m, wrong_ids};
  try {
    ensemble_sum(bad_ids);
    FAIL("expected IdMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::IdMismatch);
  }
  auto wrong_shape = m;
  wrong_shape.head_ids.pop_back();
  wrong_shape.values = Matrix(4, 3);
  const std::vector<EntropyMatrix> bad_shape = {m, wrong_shape};
  try {
    ensemble_sum(bad_shape);
    FAIL("expected ShapeMismatch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ShapeMismatch);
  }
}

TEST_CASE("summing before normalization is not the same as after") {
  // Normalizing each member and summing equals normalizing the sum (both are
  // linear), but exponentiating first does not commute: pin the order used.
  auto a = sample_matrix();
  auto b = sample_matrix();
  for (auto& x : b.values.values) x = x * x;
  const std::vector<EntropyMatrix> both = {a, b};
  const auto summed = to_affinity(normalize_by_controls(ensemble_sum(both), kControls, sample_problem()),
                                  testing::ids(3));
  const auto aa = to_affinity(normalize_by_controls(a, kControls, sample_problem()), testing::ids(3));
  const auto ab = to_affinity(normalize_by_controls(b, kControls, sample_problem()), testing::ids(3));
  bool differs = false;
  for (std::size_t i = 0; i < 9; ++i) {
    differs = differs || std::abs(summed.values.values[i] - (aa.values.values[i] + ab.values.values[i])) > 1e-9;
  }
  CHECK(differs);
}

TEST_CASE("matrix JSON round trip") {
  testing::TempDir dir;
  const auto m = sample_matrix();
  m.save(dir / "m.json");
  const auto back = EntropyMatrix::load(dir / "m.json");
  CHECK(back.values == m.values);
  CHECK(back.head_ids == m.head_ids);
  CHECK(back.text_ids == m.text_ids);
}

TEST_CASE("diagonal_dominance") {
  Rng rng(2);
  const auto a = testing::random_affinity(rng, 6);
  CHECK(diagonal_dominance(a) == 1.0);
  auto b = a;
  b.values(0, 0) = 0.0;
  auto prev = log::set_sink([](log::Level, const std::string&) {});
  CHECK(diagonal_dominance(b) == doctest::Approx(5.0 / 6));
  log::set_sink(prev);
}
