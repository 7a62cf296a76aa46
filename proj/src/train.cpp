#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "bptt.hpp"
#include "mhrnn/error.hpp"
#include "mhrnn/log.hpp"
#include "mhrnn/model.hpp"

namespace mhrnn {
namespace {

// Plain adagrad: G += g^2; w -= lr * g / (sqrt(G) + eps).
void adagrad(std::span<float> weights, std::span<float> accum, std::span<const double> grad,
             double lr, double eps) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    if (g == 0.0) continue;
    const auto G = static_cast<float>(static_cast<double>(accum[i]) + g * g);
    accum[i] = G;
    weights[i] = static_cast<float>(static_cast<double>(weights[i]) -
                                    lr * g / (std::sqrt(static_cast<double>(G)) + eps));
  }
}

void apply_update(Model& model, const Gradients& g, const Hyperparameters& hyper) {
  auto& w = model.weights();
  auto& a = model.accumulators();
  const double lr = hyper.learning_rate;
  const double eps = hyper.adagrad_epsilon;
  adagrad(w.input, a.input, g.input, lr, eps);
  adagrad(w.recurrent, a.recurrent, g.recurrent, lr, eps);
  adagrad(w.hidden_bias, a.hidden_bias, g.hidden_bias, lr, eps);
  const std::size_t k = model.alphabet_size();
  const std::size_t block = k * model.hidden_size();
  for (const auto& [head, hg] : g.heads) {
    adagrad(std::span<float>(w.output).subspan(head * block, block),
            std::span<float>(a.output).subspan(head * block, block), hg.output, lr, eps);
    adagrad(std::span<float>(w.output_bias).subspan(head * k, k),
            std::span<float>(a.output_bias).subspan(head * k, k), hg.bias, lr, eps);
  }
}

double validation_entropy(const Model& model, std::span<const EncodedDoc> documents,
                          double validation_fraction) {
  double total = 0.0;
  std::size_t n = 0;
  for (std::size_t head = 0; head < documents.size(); ++head) {
    if (documents[head].symbols.empty()) continue;
    const auto split = split_for_validation(documents[head].symbols, validation_fraction);
    total += cross_entropy(model, head, split.validation);
    ++n;
  }
  return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace

DocumentSplit split_for_validation(std::span<const Symbol> symbols, double validation_fraction) {
  if (symbols.size() < 4) {
    throw Error(ErrorCode::DocTooShort,
                "a training document needs at least 4 symbols, got " +
                    std::to_string(symbols.size()));
  }
  auto tail = static_cast<std::size_t>(
      std::floor(static_cast<double>(symbols.size()) * validation_fraction));
  tail = std::clamp<std::size_t>(tail, 2, symbols.size() - 2);
  return {symbols.first(symbols.size() - tail), symbols.last(tail)};
}

nlohmann::json TrainingLog::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : epochs) {
    rows.push_back({{"epoch", e.epoch},
                    {"training_bits", e.training_bits},
                    {"validation_bits", e.validation_bits},
                    {"leak_rate", e.leak_rate}});
  }
  return {{"epochs", rows}, {"best_epoch", best_epoch}, {"stop_reason", stop_reason}};
}

TrainingResult train(Model model, std::span<const EncodedDoc> documents,
                     const Hyperparameters& hyper) {
  hyper.validate();
  if (documents.size() != model.n_heads()) {
    throw Error(ErrorCode::ShapeMismatch,
                "model has " + std::to_string(model.n_heads()) + " heads but " +
                    std::to_string(documents.size()) + " documents were given");
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < documents.size(); ++i) {
    const auto& doc = documents[i];
    if (doc.symbols.empty()) {
      log::warning("document " + doc.doc_id + " has no symbols; its head is not trained");
      continue;
    }
    for (Symbol s : doc.symbols) {
      if (s >= model.alphabet_size()) {
        throw Error(ErrorCode::InvalidArgument, "document " + doc.doc_id + " has out-of-range symbols");
      }
    }
    split_for_validation(doc.symbols, hyper.validation_fraction);
    order.push_back(i);
  }
  if (order.empty()) throw Error(ErrorCode::EmptyCorpus, "no trainable documents");

  const std::size_t M = model.n_heads();
  const std::size_t H = model.hidden_size();
  const std::size_t W = hyper.bptt_window;
  Rng rng(derive_seed(hyper.seed, 1));
  Gradients grads(model);
  detail::BpttBuffers buffers;
  std::vector<std::size_t> leak_heads;
  std::vector<double> state(H);

  TrainingResult result{std::move(model), {}};
  Model& m = result.model;
  auto& log = result.log;
  double best = std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 0; epoch < hyper.max_epochs; ++epoch) {
    const double leak_rate = M > 1 ? hyper.leak * std::pow(hyper.leak_decay, epoch) : 0.0;
    rng.shuffle(order.begin(), order.end());
    double epoch_loss = 0.0;
    std::size_t epoch_steps = 0;

    for (const std::size_t head : order) {
      const auto train_part =
          split_for_validation(documents[head].symbols, hyper.validation_fraction).training;
      std::fill(state.begin(), state.end(), 0.0);
      for (std::size_t start = 0; start + 1 < train_part.size(); start += W) {
        const std::size_t end = std::min(start + W, train_part.size() - 1);
        const auto window = train_part.subspan(start, end - start + 1);
        const std::size_t steps = end - start;

        leak_heads.assign(steps, detail::kNoHead);
        if (leak_rate > 0.0) {
          for (auto& lh : leak_heads) {
            if (rng.uniform() < leak_rate) {
              const auto other = rng.below(M - 1);
              lh = other >= head ? other + 1 : other;
            }
          }
        }
        grads.clear();
        const double loss = detail::run_window(m, window, head, leak_heads, state, hyper.psn,
                                               &rng, grads, buffers);
        if (!std::isfinite(loss)) {
          throw Error(ErrorCode::NonFiniteLoss,
                      "training loss became non-finite; try a lower learning_rate");
        }
        apply_update(m, grads, hyper);
        epoch_loss += loss;
        epoch_steps += steps;
      }
    }
    if (!m.all_finite()) {
      throw Error(ErrorCode::NonFiniteLoss, "weights became non-finite; try a lower learning_rate");
    }

    const double validation = validation_entropy(m, documents, hyper.validation_fraction);
    if (!std::isfinite(validation)) {
      throw Error(ErrorCode::NonFiniteLoss, "validation entropy is non-finite");
    }
    const double training_bits =
        epoch_loss / (static_cast<double>(std::max<std::size_t>(epoch_steps, 1)) * std::numbers::ln2);
    log.epochs.push_back({epoch, training_bits, validation, leak_rate});
    {
      std::ostringstream msg;
      msg << "epoch " << epoch << " train " << training_bits << " validation " << validation
          << " bits/char";
      log::info(msg.str());
    }
    if (validation < best) {
      best = validation;
      log.best_epoch = epoch;
    }
    if (epoch - log.best_epoch >= hyper.overfit_epochs) {
      log.stop_reason = "overfit";
      return result;
    }
  }
  log.stop_reason = "max_epochs";
  return result;
}

}  // namespace mhrnn
