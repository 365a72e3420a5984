#include "strata/decoder.hpp"

#include <numeric>
#include <stdexcept>

#include "strata/vocab.hpp"

namespace strata {

std::vector<bool> generation_mask(std::size_t vocab_size) {
  std::vector<bool> mask(vocab_size, true);
  mask[Vocabulary::kPad] = false;
  mask[Vocabulary::kStart] = false;
  return mask;
}

DecoderStepState initial_state(Graph& g, const ModelVars& m, const EncodedDocument& enc, const DecodeMode& mode) {
  const std::size_t H = m.decoder.hidden;
  DecoderStepState s;
  s.lstm.h = g.tanh(g.add(g.matvec(m.init_w, enc.doc_vector), m.init_b));
  s.lstm.c = g.zeros({H});
  s.context = g.zeros({H});
  if (mode.coverage) s.coverage = g.zeros({enc.word_mask.size()});
  return s;
}

Var generation_distribution(Graph& g, const ModelVars& m, Var state, Var context) {
  Var mixed = g.add(g.add(g.matvec(m.out_state, state), g.matvec(m.out_context, context)), m.out_bias);
  Var logits = g.matvec(m.out_vocab, mixed);
  return g.softmax_masked(logits, generation_mask(g.size(logits)));
}

Var switch_probability(Graph& g, const ModelVars& m, Var state, Var context, Var input_embedding) {
  Var pre = g.add(g.add(g.matvec(m.switch_state, state), g.matvec(m.switch_context, context)),
                  g.add(g.matvec(m.switch_input, input_embedding), m.switch_bias));
  return g.sigmoid(pre);
}

Var mix_distributions(Graph& g, Var p_gen, Var p_copy, Var p_switch) {
  const std::size_t ext = g.size(p_copy), base = g.size(p_gen);
  if (base > ext) throw std::invalid_argument("mix_distributions: extended vocabulary smaller than base");
  std::vector<std::size_t> ident(base);
  std::iota(ident.begin(), ident.end(), std::size_t{0});
  Var gen = g.scatter_add(g.scale(p_gen, g.affine(p_switch, -1.0, 1.0)), ident, ext);
  return g.add(gen, g.scale(p_copy, p_switch));
}

StepOutput decode_step(Graph& g, const ModelVars& m, const EncodedDocument& enc, const DecoderStepState& prev,
                       std::size_t y_prev, const DecodeMode& mode) {
  if (mode.coverage != prev.coverage.valid())
    throw std::invalid_argument("decode_step: coverage mode does not match decoder state");
  const std::size_t vocab = g.shape(m.embedding)[0];
  if (y_prev >= enc.ext_size && y_prev >= vocab) throw std::out_of_range("decode_step: previous token outside extended vocabulary");
  const std::size_t input_id = y_prev < vocab ? y_prev : Vocabulary::kUnk;

  StepOutput out;
  Var x = g.lookup(m.embedding, input_id);
  if (mode.flat) {
    out.beta = g.constant({enc.sections}, std::vector<double>(enc.sections, 1.0));
  } else {
    out.beta = section_weights(g, m.sec_attn, enc, prev.lstm.h);
  }
  out.alpha = word_weights(g, m.word_attn, enc, out.beta, prev.coverage, prev.lstm.h);
  Var context = context_vector(g, out.alpha, enc.word_states);

  out.state.lstm = lstm_step(g, m.decoder, g.concat({x, context}), prev.lstm);
  out.state.context = context;
  out.state.step = prev.step + 1;
  if (mode.coverage) out.state.coverage = update_coverage(g, prev.coverage, out.alpha);

  out.generation = generation_distribution(g, m, out.state.lstm.h, context);
  out.switch_prob = switch_probability(g, m, out.state.lstm.h, context, x);
  out.copy = copy_distribution(g, out.alpha, enc.ext_ids, enc.ext_size);
  out.final_dist = mix_distributions(g, out.generation, out.copy, out.switch_prob);
  return out;
}

}  // namespace strata
