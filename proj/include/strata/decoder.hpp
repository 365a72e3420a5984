#pragma once

#include <vector>

#include "strata/attention.hpp"
#include "strata/encoder.hpp"
#include "strata/model.hpp"

namespace strata {

struct DecodeMode {
  bool coverage = false;
  bool flat = false;  // section weights fixed to 1
};

struct DecoderStepState {
  LstmState lstm;  // s_t
  Var context;     // c_t (zeros before the first step)
  Var coverage;    // [N*M]; invalid when coverage is off
  std::size_t step = 0;
};

struct StepOutput {
  DecoderStepState state;
  Var alpha;        // [N*M]
  Var beta;         // [N]
  Var generation;   // p_g over the base vocabulary
  Var copy;         // p_c over the extended vocabulary
  Var switch_prob;  // [1], p(z_t = 1), i.e. copy
  Var final_dist;   // mixture over the extended vocabulary
};

/// s_0 = (tanh(W d + b), 0), c_0 = 0, coverage_0 = 0.
DecoderStepState initial_state(Graph& g, const ModelVars& m, const EncodedDocument& enc, const DecodeMode& mode);

/// softmax(V (W_s s + W_c c + b)) with PAD and START held at probability 0.
Var generation_distribution(Graph& g, const ModelVars& m, Var state, Var context);

/// sigmoid(w_s s + w_c c + w_x x' + b)
Var switch_probability(Graph& g, const ModelVars& m, Var state, Var context, Var input_embedding);

/// Scatter-adds attention weights onto the extended ids of their source words.
inline Var copy_distribution(Graph& g, Var alpha, const std::vector<std::size_t>& ext_ids, std::size_t ext_size) {
  return g.scatter_add(alpha, ext_ids, ext_size);
}

/// (1 - p) * p_g (zero-extended) + p * p_c
Var mix_distributions(Graph& g, Var p_gen, Var p_copy, Var p_switch);

/// One decoder step for previous token y_prev (extended space; ids outside
/// the base vocabulary are fed back as UNK):
///   beta, alpha from s_{t-1}; c_t; s_t = LSTM([x'_t; c_t], s_{t-1});
///   p_g, p_switch, p_c, mixture; coverage += alpha.
StepOutput decode_step(Graph& g, const ModelVars& m, const EncodedDocument& enc, const DecoderStepState& prev,
                       std::size_t y_prev, const DecodeMode& mode);

/// Base-vocabulary mask used by generation_distribution.
std::vector<bool> generation_mask(std::size_t vocab_size);

}  // namespace strata
