#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "mhrnn/model.hpp"

namespace mhrnn::detail {

inline constexpr std::size_t kNoHead = std::numeric_limits<std::size_t>::max();

struct BpttBuffers {
  std::vector<double> hidden;      // (steps + 1) x H; row 0 is the incoming state
  std::vector<double> derivative;  // steps x H, resqrt'(a)
  std::vector<double> output_grad; // steps x H, dL/dh from the heads
  std::vector<double> logits;
  std::vector<double> delta;
  std::vector<double> da;
  std::vector<double> carry;
};

// Hidden pre-activation and ReSQRT for one step. `derivative` may be null.
void recurrent_step(const Model& model, const double* h_prev, Symbol symbol, double noise_std,
                    Rng* rng, double* h_out, double* derivative);

// logits = W_hy[head] h + b_y[head].
void head_logits(const Model& model, std::size_t head, const double* h, double* logits);

// Natural log of the softmax probability of `target` given logits.
double log_probability(std::span<const double> logits, Symbol target);

// Forward and backward over one truncated window. seq holds steps + 1
// symbols: inputs seq[0..steps) and targets seq[1..steps]. `state` is the
// incoming hidden state and is replaced by the outgoing one. leak_heads is
// empty or holds one entry per step (kNoHead for none). Gradients are added
// to `grads`; returns the primary head's loss in nats.
double run_window(const Model& model, std::span<const Symbol> seq, std::size_t head,
                  std::span<const std::size_t> leak_heads, std::vector<double>& state,
                  double noise_std, Rng* rng, Gradients& grads, BpttBuffers& buffers);

}  // namespace mhrnn::detail
