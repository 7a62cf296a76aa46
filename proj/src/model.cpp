#include "mhrnn/model.hpp"

#include <algorithm>
#include <cmath>

#include "bptt.hpp"
#include "mhrnn/error.hpp"

namespace mhrnn {

std::string_view to_string(Direction d) {
  return d == Direction::forward ? "forward" : "reverse";
}

Direction parse_direction(std::string_view s) {
  if (s == "forward") return Direction::forward;
  if (s == "reverse") return Direction::reverse;
  throw Error(ErrorCode::InvalidArgument, "direction must be forward or reverse");
}

void Hyperparameters::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidArgument, what); };
  if (hidden_size < 1) fail("hidden_size must be at least 1");
  if (overfit_epochs < 1) fail("overfit_epochs must be at least 1");
  if (bptt_window < 1) fail("bptt_window must be at least 1");
  if (max_epochs < 1) fail("max_epochs must be at least 1");
  if (!(psn >= 0.0)) fail("psn must be nonnegative");
  if (!(leak >= 0.0 && leak <= 1.0)) fail("leak must lie in [0, 1]");
  if (!(leak_decay > 0.0 && leak_decay <= 1.0)) fail("leak_decay must lie in (0, 1]");
  if (!(learning_rate > 0.0)) fail("learning_rate must be positive");
  if (!(adagrad_epsilon > 0.0)) fail("adagrad_epsilon must be positive");
  if (!(init_scale >= 0.0)) fail("init_scale must be nonnegative");
  if (!(validation_fraction > 0.0 && validation_fraction < 0.5)) {
    fail("validation_fraction must lie in (0, 0.5)");
  }
  if (df_threshold && !(*df_threshold > 0.0 && *df_threshold < 1.0)) {
    fail("df_threshold must lie in (0, 1)");
  }
}

nlohmann::json Hyperparameters::to_json() const {
  nlohmann::json j = {
      {"hidden_size", hidden_size},
      {"psn", psn},
      {"leak", leak},
      {"leak_decay", leak_decay},
      {"overfit_epochs", overfit_epochs},
      {"direction", to_string(direction)},
      {"df_threshold", nullptr},
      {"learning_rate", learning_rate},
      {"adagrad_epsilon", adagrad_epsilon},
      {"bptt_window", bptt_window},
      {"init_scale", init_scale},
      {"seed", seed},
      {"validation_fraction", validation_fraction},
      {"max_epochs", max_epochs},
  };
  if (df_threshold) j["df_threshold"] = *df_threshold;
  return j;
}

Hyperparameters Hyperparameters::from_json(const nlohmann::json& j) {
  Hyperparameters h;
  try {
    h.hidden_size = j.value("hidden_size", h.hidden_size);
    h.psn = j.value("psn", h.psn);
    h.leak = j.value("leak", h.leak);
    h.leak_decay = j.value("leak_decay", h.leak_decay);
    h.overfit_epochs = j.value("overfit_epochs", h.overfit_epochs);
    h.direction = parse_direction(j.value("direction", std::string("forward")));
    if (j.contains("df_threshold") && !j.at("df_threshold").is_null()) {
      h.df_threshold = j.at("df_threshold").get<double>();
    }
    h.learning_rate = j.value("learning_rate", h.learning_rate);
    h.adagrad_epsilon = j.value("adagrad_epsilon", h.adagrad_epsilon);
    h.bptt_window = j.value("bptt_window", h.bptt_window);
    h.init_scale = j.value("init_scale", h.init_scale);
    h.seed = j.value("seed", h.seed);
    h.validation_fraction = j.value("validation_fraction", h.validation_fraction);
    h.max_epochs = j.value("max_epochs", h.max_epochs);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("hyperparameters: ") + e.what());
  }
  h.validate();
  return h;
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
ParameterSet<T> shaped(std::size_t k, std::size_t m, std::size_t h) {
  ParameterSet<T> p;
  p.input.assign(h * k, T{});
  p.recurrent.assign(h * h, T{});
  p.hidden_bias.assign(h, T{});
  p.output.assign(m * k * h, T{});
  p.output_bias.assign(m * k, T{});
  return p;
}

template <typename T>
bool finite(const std::vector<T>& v) {
  return std::all_of(v.begin(), v.end(), [](T x) { return std::isfinite(x); });
}

}  // namespace

Model::Model(std::size_t alphabet_size, std::size_t n_heads, Hyperparameters hyper)
    : alphabet_size_(alphabet_size), n_heads_(n_heads), hyper_(std::move(hyper)) {
  if (alphabet_size < 1 || n_heads < 1) {
    throw Error(ErrorCode::InvalidArgument, "model needs at least one symbol and one head");
  }
  hyper_.validate();
  weights_ = shaped<float>(alphabet_size_, n_heads_, hyper_.hidden_size);
  accumulators_ = shaped<float>(alphabet_size_, n_heads_, hyper_.hidden_size);
}

std::span<const float> Model::head_output(std::size_t head) const {
  const std::size_t block = alphabet_size_ * hidden_size();
  return std::span<const float>(weights_.output).subspan(head * block, block);
}

std::span<const float> Model::head_bias(std::size_t head) const {
  return std::span<const float>(weights_.output_bias).subspan(head * alphabet_size_,
                                                               alphabet_size_);
}

bool Model::all_finite() const {
  const auto& w = weights_;
  return finite(w.input) && finite(w.recurrent) && finite(w.hidden_bias) && finite(w.output) &&
         finite(w.output_bias);
}

Model init_model(std::size_t alphabet_size, std::size_t n_heads, const Hyperparameters& hyper) {
  Model model(alphabet_size, n_heads, hyper);
  Rng rng(derive_seed(hyper.seed, 0));
  const double s = hyper.init_scale;
  auto fill = [&](std::vector<float>& v) {
    for (auto& x : v) x = static_cast<float>(rng.uniform(-s, s));
  };
  auto& w = model.weights();
  fill(w.input);
  fill(w.recurrent);
  fill(w.output);
  return model;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.begin(), z.end());
  if (p.empty()) return p;
  const double top = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (auto& x : p) {
    x = std::exp(x - top);
    sum += x;
  }
  for (auto& x : p) x /= sum;
  return p;
}

HiddenState zero_state(const Model& model) {
  return HiddenState{std::vector<double>(model.hidden_size(), 0.0)};
}

// ---------------------------------------------------------------------------

namespace detail {

void recurrent_step(const Model& model, const double* h_prev, Symbol symbol, double noise_std,
                    Rng* rng, double* h_out, double* derivative) {
  const std::size_t H = model.hidden_size();
  const std::size_t k = model.alphabet_size();
  const auto& w = model.weights();
  for (std::size_t i = 0; i < H; ++i) {
    const float* row = w.recurrent.data() + i * H;
    double a = static_cast<double>(w.input[i * k + symbol]) + w.hidden_bias[i];
    for (std::size_t j = 0; j < H; ++j) a += static_cast<double>(row[j]) * h_prev[j];
    if (noise_std > 0.0) a += noise_std * rng->normal();
    if (a >= 0.0) {
      const double h = std::sqrt(a + 1.0) - 1.0;
      h_out[i] = h;
      if (derivative) derivative[i] = 0.5 / (h + 1.0);
    } else {
      h_out[i] = 0.0;
      if (derivative) derivative[i] = 0.0;
    }
  }
}

void head_logits(const Model& model, std::size_t head, const double* h, double* logits) {
  const std::size_t H = model.hidden_size();
  const std::size_t k = model.alphabet_size();
  const float* out = model.weights().output.data() + head * k * H;
  const float* bias = model.weights().output_bias.data() + head * k;
  for (std::size_t s = 0; s < k; ++s) {
    const float* row = out + s * H;
    double z = bias[s];
    for (std::size_t j = 0; j < H; ++j) z += static_cast<double>(row[j]) * h[j];
    logits[s] = z;
  }
}

double log_probability(std::span<const double> logits, Symbol target) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - top);
  return logits[target] - top - std::log(sum);
}

namespace {

// Softmax cross-entropy gradient for one head at one step: accumulates into
// the head's weight gradient and into dh. Returns the loss in nats.
double head_backward(const Model& model, std::size_t head, const double* h, Symbol target,
                     Gradients& grads, BpttBuffers& b, double* dh) {
  const std::size_t H = model.hidden_size();
  const std::size_t k = model.alphabet_size();
  head_logits(model, head, h, b.logits.data());
  const double top = *std::max_element(b.logits.begin(), b.logits.end());
  double sum = 0.0;
  for (std::size_t s = 0; s < k; ++s) {
    b.delta[s] = std::exp(b.logits[s] - top);
    sum += b.delta[s];
  }
  const double loss = -(b.logits[target] - top - std::log(sum));
  for (std::size_t s = 0; s < k; ++s) b.delta[s] /= sum;
  b.delta[target] -= 1.0;

  auto& hg = grads.heads[head];
  if (hg.output.empty()) {
    hg.output.assign(k * H, 0.0);
    hg.bias.assign(k, 0.0);
  }
  const float* out = model.weights().output.data() + head * k * H;
  for (std::size_t s = 0; s < k; ++s) {
    const double d = b.delta[s];
    hg.bias[s] += d;
    double* grow = hg.output.data() + s * H;
    const float* wrow = out + s * H;
    for (std::size_t j = 0; j < H; ++j) {
      grow[j] += d * h[j];
      dh[j] += d * static_cast<double>(wrow[j]);
    }
  }
  return loss;
}

}  // namespace

double run_window(const Model& model, std::span<const Symbol> seq, std::size_t head,
                  std::span<const std::size_t> leak_heads, std::vector<double>& state,
                  double noise_std, Rng* rng, Gradients& grads, BpttBuffers& b) {
  if (seq.size() < 2) return 0.0;
  const std::size_t steps = seq.size() - 1;
  const std::size_t H = model.hidden_size();
  const std::size_t k = model.alphabet_size();

  b.hidden.resize((steps + 1) * H);
  b.derivative.resize(steps * H);
  b.output_grad.assign(steps * H, 0.0);
  b.logits.resize(k);
  b.delta.resize(k);
  b.da.resize(H);
  b.carry.assign(H, 0.0);
  std::copy(state.begin(), state.end(), b.hidden.begin());

  double loss = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    const double* h_prev = b.hidden.data() + t * H;
    double* h = b.hidden.data() + (t + 1) * H;
    recurrent_step(model, h_prev, seq[t], noise_std, rng, h, b.derivative.data() + t * H);
    double* dh = b.output_grad.data() + t * H;
    loss += head_backward(model, head, h, seq[t + 1], grads, b, dh);
    if (!leak_heads.empty() && leak_heads[t] != kNoHead) {
      head_backward(model, leak_heads[t], h, seq[t + 1], grads, b, dh);
    }
  }
  std::copy(b.hidden.begin() + static_cast<std::ptrdiff_t>(steps * H), b.hidden.end(),
            state.begin());

  const auto& w = model.weights();
  for (std::size_t t = steps; t-- > 0;) {
    const double* dh_out = b.output_grad.data() + t * H;
    const double* deriv = b.derivative.data() + t * H;
    const double* h_prev = b.hidden.data() + t * H;
    for (std::size_t i = 0; i < H; ++i) b.da[i] = (dh_out[i] + b.carry[i]) * deriv[i];
    std::fill(b.carry.begin(), b.carry.end(), 0.0);
    const Symbol x = seq[t];
    for (std::size_t i = 0; i < H; ++i) {
      const double da = b.da[i];
      if (da == 0.0) continue;
      grads.input[i * k + x] += da;
      grads.hidden_bias[i] += da;
      double* grow = grads.recurrent.data() + i * H;
      const float* wrow = w.recurrent.data() + i * H;
      for (std::size_t j = 0; j < H; ++j) {
        grow[j] += da * h_prev[j];
        b.carry[j] += da * static_cast<double>(wrow[j]);
      }
    }
  }
  return loss;
}

}  // namespace detail

// ---------------------------------------------------------------------------

StepOutput forward_step(const Model& model, const HiddenState& state, Symbol symbol,
                        std::size_t head, double noise_std, Rng* rng) {
  if (symbol >= model.alphabet_size()) {
    throw Error(ErrorCode::InvalidArgument, "symbol outside the alphabet");
  }
  if (head >= model.n_heads()) throw Error(ErrorCode::InvalidArgument, "head out of range");
  if (state.h.size() != model.hidden_size()) {
    throw Error(ErrorCode::ShapeMismatch, "hidden state has the wrong size");
  }
  if (noise_std > 0.0 && rng == nullptr) {
    throw Error(ErrorCode::InvalidArgument, "noise requested without a random source");
  }
  StepOutput out;
  out.state.h.resize(model.hidden_size());
  detail::recurrent_step(model, state.h.data(), symbol, noise_std, rng, out.state.h.data(),
                         nullptr);
  std::vector<double> logits(model.alphabet_size());
  detail::head_logits(model, head, out.state.h.data(), logits.data());
  out.probabilities = softmax(logits);
  return out;
}

namespace {

void check_sequence(const Model& model, std::span<const Symbol> symbols) {
  if (symbols.size() < 2) {
    throw Error(ErrorCode::DocTooShort, "need at least two symbols to score a text");
  }
  for (Symbol s : symbols) {
    if (s >= model.alphabet_size()) {
      throw Error(ErrorCode::InvalidArgument, "symbol outside the alphabet");
    }
  }
}

}  // namespace

double sequence_loss(const Model& model, std::size_t head, std::span<const Symbol> symbols) {
  check_sequence(model, symbols);
  if (head >= model.n_heads()) throw Error(ErrorCode::InvalidArgument, "head out of range");
  const std::size_t H = model.hidden_size();
  std::vector<double> h(H, 0.0), next(H);
  std::vector<double> logits(model.alphabet_size());
  double loss = 0.0;
  for (std::size_t t = 0; t + 1 < symbols.size(); ++t) {
    detail::recurrent_step(model, h.data(), symbols[t], 0.0, nullptr, next.data(), nullptr);
    h.swap(next);
    detail::head_logits(model, head, h.data(), logits.data());
    loss -= detail::log_probability(logits, symbols[t + 1]);
  }
  return loss;
}

double cross_entropy(const Model& model, std::size_t head, std::span<const Symbol> symbols) {
  const double nats = sequence_loss(model, head, symbols);
  return nats / (static_cast<double>(symbols.size() - 1) * std::numbers::ln2);
}

double cross_entropy(const Model& model, std::size_t head, const EncodedDoc& doc) {
  return cross_entropy(model, head, std::span<const Symbol>(doc.symbols));
}

std::vector<double> cross_entropy_all_heads(const Model& model, std::span<const Symbol> symbols) {
  check_sequence(model, symbols);
  const std::size_t H = model.hidden_size();
  const std::size_t M = model.n_heads();
  std::vector<double> h(H, 0.0), next(H);
  std::vector<double> logits(model.alphabet_size());
  std::vector<double> nats(M, 0.0);
  for (std::size_t t = 0; t + 1 < symbols.size(); ++t) {
    detail::recurrent_step(model, h.data(), symbols[t], 0.0, nullptr, next.data(), nullptr);
    h.swap(next);
    for (std::size_t m = 0; m < M; ++m) {
      detail::head_logits(model, m, h.data(), logits.data());
      nats[m] -= detail::log_probability(logits, symbols[t + 1]);
    }
  }
  const double scale = 1.0 / (static_cast<double>(symbols.size() - 1) * std::numbers::ln2);
  for (auto& x : nats) x *= scale;
  return nats;
}

// ---------------------------------------------------------------------------

Gradients::Gradients(const Model& model)
    : input(model.weights().input.size(), 0.0),
      recurrent(model.weights().recurrent.size(), 0.0),
      hidden_bias(model.weights().hidden_bias.size(), 0.0) {}

void Gradients::clear() {
  std::fill(input.begin(), input.end(), 0.0);
  std::fill(recurrent.begin(), recurrent.end(), 0.0);
  std::fill(hidden_bias.begin(), hidden_bias.end(), 0.0);
  heads.clear();
}

LossAndGradients compute_gradients(const Model& model, std::size_t head,
                                   std::span<const Symbol> symbols) {
  check_sequence(model, symbols);
  if (head >= model.n_heads()) throw Error(ErrorCode::InvalidArgument, "head out of range");
  LossAndGradients result{0.0, Gradients(model)};
  std::vector<double> state(model.hidden_size(), 0.0);
  detail::BpttBuffers buffers;
  result.loss = detail::run_window(model, symbols, head, {}, state, 0.0, nullptr,
                                   result.gradients, buffers);
  return result;
}

GradientCheckReport gradient_check(const Model& model, const EncodedDoc& doc, std::size_t head,
                                   double delta) {
  const std::span<const Symbol> symbols(doc.symbols);
  const auto analytic = compute_gradients(model, head, symbols);
  const std::size_t k = model.alphabet_size();
  const std::size_t H = model.hidden_size();

  Model probe = model;
  GradientCheckReport report;

  auto check_block = [&](const char* name, std::vector<float>& weights,
                         auto&& analytic_at) {
    for (std::size_t i = 0; i < weights.size(); ++i) {
      const float original = weights[i];
      const auto plus = static_cast<float>(original + delta);
      const auto minus = static_cast<float>(original - delta);
      weights[i] = plus;
      const double loss_plus = sequence_loss(probe, head, symbols);
      weights[i] = minus;
      const double loss_minus = sequence_loss(probe, head, symbols);
      weights[i] = original;
      // Divide by the step actually taken after rounding to float.
      const double numeric =
          (loss_plus - loss_minus) / (static_cast<double>(plus) - static_cast<double>(minus));
      const double a = analytic_at(i);
      report.max_relative_error =
          std::max(report.max_relative_error, std::abs(a - numeric) / (std::abs(numeric) + 1e-8));
      report.entries.push_back({name, i, a, numeric});
    }
  };

  const auto& g = analytic.gradients;
  auto& w = probe.weights();
  check_block("input", w.input, [&](std::size_t i) { return g.input[i]; });
  check_block("recurrent", w.recurrent, [&](std::size_t i) { return g.recurrent[i]; });
  check_block("hidden_bias", w.hidden_bias, [&](std::size_t i) { return g.hidden_bias[i]; });
  check_block("output", w.output, [&](std::size_t i) {
    const auto it = g.heads.find(i / (k * H));
    return it == g.heads.end() ? 0.0 : it->second.output[i % (k * H)];
  });
  check_block("output_bias", w.output_bias, [&](std::size_t i) {
    const auto it = g.heads.find(i / k);
    return it == g.heads.end() ? 0.0 : it->second.bias[i % k];
  });
  return report;
}

}  // namespace mhrnn
