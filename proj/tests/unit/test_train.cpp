#include <doctest.h>

#include <cmath>
#include <string>

#include "mhrnn/error.hpp"
#include "mhrnn/log.hpp"
#include "mhrnn/model.hpp"
#include "mhrnn/textprep.hpp"

using namespace mhrnn;

namespace {

EncodedDoc periodic(std::size_t length, std::size_t period = 2) {
  EncodedDoc d;
  for (std::size_t i = 0; i < length; ++i) d.symbols.push_back(static_cast<Symbol>(i % period));
  return d;
}

// About 10 kB of English-like text built from a fixed word list.
std::string english_sample() {
  const std::vector<std::string> words = {
      "the", "of", "and", "a", "to", "in", "is", "you", "that", "it", "he", "was", "for", "on",
      "are", "as", "with", "his", "they", "at", "be", "this", "have", "from", "or", "one",
      "had", "by", "word", "but", "not", "what", "all", "were", "we", "when", "your", "can",
      "said", "there", "use", "an", "each", "which", "she", "do", "how", "their", "if", "will"};
  Rng rng(17);
  std::string s;
  while (s.size() < 10000) {
    s += words[std::min(rng.below(words.size()), rng.below(words.size()))];
    s += rng.below(12) == 0 ? ". " : " ";
  }
  return s;
}

}  // namespace

TEST_CASE("split_for_validation keeps the tail") {
  std::vector<Symbol> s(100);
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = static_cast<Symbol>(i);
  const auto split = split_for_validation(s, 0.05);
  CHECK(split.training.size() == 95);
  CHECK(split.validation.size() == 5);
  CHECK(split.validation.front() == 95);
  CHECK(split_for_validation(std::span(s).first(10), 0.05).validation.size() == 2);
  CHECK_THROWS_AS(split_for_validation(std::span(s).first(3), 0.05), Error);
}

TEST_CASE("training learns a period-2 sequence") {
  Hyperparameters h;
  h.hidden_size = 8;
  h.overfit_epochs = 50;
  h.max_epochs = 50;
  h.seed = 3;
  const std::vector<EncodedDoc> docs = {periodic(400)};
  const auto result = train(init_model(2, 1, h), docs, h);
  CHECK(cross_entropy(result.model, 0, docs[0]) < 0.1);
}

TEST_CASE("a trained head beats the uniform baseline on its own document") {
  const auto text = normalize(english_sample(), "en");
  const std::vector<NormalizedText> corpus = {text};
  const auto alphabet = build_alphabet(corpus, 1e-4, "en");
  const std::vector<EncodedDoc> docs = {encode(text, alphabet, false)};
  Hyperparameters h;
  h.hidden_size = 24;
  h.max_epochs = 5;
  h.overfit_epochs = 5;
  const auto result = train(init_model(alphabet.size(), 1, h), docs, h);
  CHECK(cross_entropy(result.model, 0, docs[0]) < std::log2(double(alphabet.size())));
  // validation entropy goes down over the first epochs
  const auto& e = result.log.epochs;
  REQUIRE(e.size() >= 3);
  CHECK(e[1].validation_bits < e[0].validation_bits);
  CHECK(e[2].validation_bits < e[0].validation_bits);
}

TEST_CASE("training is deterministic given the seed") {
  Hyperparameters h;
  h.hidden_size = 6;
  h.psn = 0.3;
  h.leak = 0.5;
  h.max_epochs = 4;
  h.seed = 11;
  const std::vector<EncodedDoc> docs = {periodic(120, 3), periodic(90, 2), periodic(60, 4)};
  const auto a = train(init_model(4, 3, h), docs, h);
  const auto b = train(init_model(4, 3, h), docs, h);
  CHECK(a.model.weights() == b.model.weights());
  REQUIRE(a.log.epochs.size() == b.log.epochs.size());
  for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
    CHECK(a.log.epochs[i].validation_bits == b.log.epochs[i].validation_bits);
  }
  CHECK(a.log.epochs[1].leak_rate == doctest::Approx(0.25));
}

TEST_CASE("training stops exactly overfit_epochs past the best epoch") {
  Rng rng(2);
  EncodedDoc noise;
  for (int i = 0; i < 200; ++i) noise.symbols.push_back(static_cast<Symbol>(rng.below(6)));
  const std::vector<EncodedDoc> docs = {noise};
  for (std::size_t overfit : {1u, 2u, 4u}) {
    Hyperparameters h;
    h.hidden_size = 16;
    h.learning_rate = 0.3;
    h.overfit_epochs = overfit;
    h.validation_fraction = 0.2;
    const auto r = train(init_model(6, 1, h), docs, h);
    REQUIRE(r.log.stop_reason == "overfit");
    CHECK(r.log.epochs.size() - 1 - r.log.best_epoch == overfit);
    // the returned model is the final one, not the best checkpoint
    double best = 1e9;
    for (const auto& e : r.log.epochs) best = std::min(best, e.validation_bits);
    CHECK(r.log.epochs[r.log.best_epoch].validation_bits == best);
  }
}

TEST_CASE("with leak 0 an unvisited head is never changed") {
  Hyperparameters h;
  h.hidden_size = 5;
  h.max_epochs = 3;
  h.psn = 0.2;
  auto prev = log::set_sink([](log::Level, const std::string&) {});
  const std::vector<EncodedDoc> docs = {periodic(80, 3), EncodedDoc{"empty", {}, false}};
  const auto start = init_model(3, 2, h);
  const auto r = train(start, docs, h);
  log::set_sink(prev);
  const auto before = start.head_output(1), after = r.model.head_output(1);
  CHECK(std::equal(before.begin(), before.end(), after.begin()));
  const auto bb = start.head_bias(1), ab = r.model.head_bias(1);
  CHECK(std::equal(bb.begin(), bb.end(), ab.begin()));
  const auto b0 = start.head_output(0), a0 = r.model.head_output(0);
  CHECK_FALSE(std::equal(b0.begin(), b0.end(), a0.begin()));
}

TEST_CASE("adagrad accumulators never decrease") {
  Hyperparameters h;
  h.hidden_size = 6;
  h.overfit_epochs = 10;
  const std::vector<EncodedDoc> docs = {periodic(100, 3), periodic(80, 5)};
  h.max_epochs = 1;
  const auto one = train(init_model(5, 2, h), docs, h);
  h.max_epochs = 2;
  const auto two = train(init_model(5, 2, h), docs, h);
  auto nondecreasing = [](const std::vector<float>& a, const std::vector<float>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (b[i] < a[i] || a[i] < 0) return false;
    }
    return true;
  };
  const auto &a = one.model.accumulators(), &b = two.model.accumulators();
  CHECK(nondecreasing(a.input, b.input));
  CHECK(nondecreasing(a.recurrent, b.recurrent));
  CHECK(nondecreasing(a.output, b.output));
  CHECK(nondecreasing(a.output_bias, b.output_bias));
}

TEST_CASE("divergence raises NonFiniteLoss") {
  Hyperparameters h;
  h.hidden_size = 4;
  h.learning_rate = 1e38;
  h.init_scale = 1.0;
  const std::vector<EncodedDoc> docs = {periodic(200, 3)};
  try {
    train(init_model(3, 1, h), docs, h);
    FAIL("expected NonFiniteLoss");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonFiniteLoss);
  }
}

TEST_CASE("hyperparameter validation and JSON") {
  Hyperparameters h;
  h.df_threshold = 0.005;
  h.direction = Direction::reverse;
  CHECK(Hyperparameters::from_json(h.to_json()) == h);
  h.leak = 1.5;
  CHECK_THROWS_AS(h.validate(), Error);
  h.leak = 0.0;
  h.validation_fraction = 0.5;
  CHECK_THROWS_AS(h.validate(), Error);
  h.validation_fraction = 0.05;
  h.hidden_size = 0;
  CHECK_THROWS_AS(h.validate(), Error);
}
