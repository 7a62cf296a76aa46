#pragma once

// Multi-headed Elman language model: one recurrent hidden layer with ReSQRT
// activation shared by M softmax heads, one head per document.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhrnn/random.hpp"
#include "mhrnn/textprep.hpp"

namespace mhrnn {

enum class Direction { forward, reverse };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

struct Hyperparameters {
  std::size_t hidden_size = 32;
  double psn = 0.0;             // std of pre-synaptic noise during training
  double leak = 0.0;            // first-epoch chance of training a non-target head
  double leak_decay = 0.5;      // leak multiplier per epoch
  std::size_t overfit_epochs = 2;
  Direction direction = Direction::forward;
  std::optional<double> df_threshold;
  double learning_rate = 0.1;
  double adagrad_epsilon = 1e-8;
  std::size_t bptt_window = 20;
  double init_scale = 0.1;
  std::uint64_t seed = 1;
  double validation_fraction = 0.05;
  std::size_t max_epochs = 100;

  void validate() const;
  nlohmann::json to_json() const;
  static Hyperparameters from_json(const nlohmann::json& j);
  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

// Weight blocks, in file order. Matrices are row-major:
//   input        [hidden x alphabet]   W_xh
//   recurrent    [hidden x hidden]     W_hh
//   hidden_bias  [hidden]              b_h
//   output       [heads x alphabet x hidden]  W_hy for each head
//   output_bias  [heads x alphabet]    b_y for each head
template <typename T>
struct ParameterSet {
  std::vector<T> input;
  std::vector<T> recurrent;
  std::vector<T> hidden_bias;
  std::vector<T> output;
  std::vector<T> output_bias;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

class Model {
 public:
  // All weights and accumulators zero.
  Model(std::size_t alphabet_size, std::size_t n_heads, Hyperparameters hyper);

  std::size_t alphabet_size() const { return alphabet_size_; }
  std::size_t n_heads() const { return n_heads_; }
  std::size_t hidden_size() const { return hyper_.hidden_size; }
  const Hyperparameters& hyper() const { return hyper_; }

  ParameterSet<float>& weights() { return weights_; }
  const ParameterSet<float>& weights() const { return weights_; }
  // Adagrad sums of squared gradients, same shapes as the weights.
  ParameterSet<float>& accumulators() { return accumulators_; }
  const ParameterSet<float>& accumulators() const { return accumulators_; }

  std::span<const float> head_output(std::size_t head) const;
  std::span<const float> head_bias(std::size_t head) const;

  // Ids of the documents behind each head, and the alphabet they were encoded
  // with. Optional metadata carried through save/load.
  std::vector<std::string> head_ids;
  std::string alphabet_hash;

  bool all_finite() const;

 private:
  std::size_t alphabet_size_;
  std::size_t n_heads_;
  Hyperparameters hyper_;
  ParameterSet<float> weights_;
  ParameterSet<float> accumulators_;
};

// Weights uniform in [-init_scale, init_scale] from hyper.seed; biases and
// accumulators zero.
Model init_model(std::size_t alphabet_size, std::size_t n_heads, const Hyperparameters& hyper);

// sqrt(x + 1) - 1 for x >= 0, else 0.
inline double resqrt(double x) { return x >= 0.0 ? std::sqrt(x + 1.0) - 1.0 : 0.0; }

std::vector<double> softmax(std::span<const double> z);

struct HiddenState {
  std::vector<double> h;
};

HiddenState zero_state(const Model& model);

struct StepOutput {
  HiddenState state;
  std::vector<double> probabilities;
};

// One recurrent step on `symbol`, then the distribution `head` predicts for
// the next symbol. Noise is only drawn when noise_std > 0.
StepOutput forward_step(const Model& model, const HiddenState& state, Symbol symbol,
                        std::size_t head, double noise_std = 0.0, Rng* rng = nullptr);

// Mean bits per character predicting symbols 2..T from the zero state.
double cross_entropy(const Model& model, std::size_t head, const EncodedDoc& doc);
double cross_entropy(const Model& model, std::size_t head, std::span<const Symbol> symbols);

// Cross-entropy of every head on one text. The hidden trajectory does not
// depend on the head, so it is computed once.
std::vector<double> cross_entropy_all_heads(const Model& model, std::span<const Symbol> symbols);

// Total natural-log loss of `head` over the sequence, without noise.
double sequence_loss(const Model& model, std::size_t head, std::span<const Symbol> symbols);

struct HeadGradient {
  std::vector<double> output;  // [alphabet x hidden]
  std::vector<double> bias;    // [alphabet]
};

struct Gradients {
  std::vector<double> input;
  std::vector<double> recurrent;
  std::vector<double> hidden_bias;
  std::map<std::size_t, HeadGradient> heads;

  explicit Gradients(const Model& model);
  void clear();
};

// Full-sequence BPTT gradient of sequence_loss for one head.
struct LossAndGradients {
  double loss;
  Gradients gradients;
};
LossAndGradients compute_gradients(const Model& model, std::size_t head,
                                   std::span<const Symbol> symbols);

struct GradientComparison {
  std::string block;  // "input", "recurrent", "hidden_bias", "output", "output_bias"
  std::size_t index;
  double analytic;
  double numeric;
};

struct GradientCheckReport {
  double max_relative_error = 0.0;
  std::vector<GradientComparison> entries;
};

// Central finite differences for every weight against the analytic gradient.
// Relative error is |analytic - numeric| / (|numeric| + 1e-8).
GradientCheckReport gradient_check(const Model& model, const EncodedDoc& doc, std::size_t head,
                                   double delta);

// ---------------------------------------------------------------------------
// Training

struct EpochRecord {
  std::size_t epoch;
  double training_bits;
  double validation_bits;
  double leak_rate;
};

struct TrainingLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::string stop_reason;

  nlohmann::json to_json() const;
};

struct TrainingResult {
  Model model;
  TrainingLog log;
};

// Adagrad with truncated BPTT, per-document heads, stochastic leakage into
// other heads, pre-synaptic noise, and a held-out tail of each document for
// validation. Stops overfit_epochs after the best validation epoch and returns
// the final weights. documents[i] trains head i; empty documents are skipped.
TrainingResult train(Model model, std::span<const EncodedDoc> documents,
                     const Hyperparameters& hyper);

// Splits a document into its training prefix and validation tail.
struct DocumentSplit {
  std::span<const Symbol> training;
  std::span<const Symbol> validation;
};
DocumentSplit split_for_validation(std::span<const Symbol> symbols, double validation_fraction);

// ---------------------------------------------------------------------------
// Model file

inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace mhrnn
