#include "strata/attention.hpp"

namespace strata {

Var score(Graph& g, const ScorerVars& scorer, Var h, Var s_prev, Var coverage) {
  Var pre = g.add(g.add(g.matvec(scorer.w_state, h), g.matvec(scorer.w_query, s_prev)), scorer.b);
  if (coverage.valid()) pre = g.add(pre, g.scale(scorer.w_cov, coverage));
  Var v_row = g.stack_rows(std::span<const Var>(&scorer.v, 1));
  return g.matvec(v_row, g.tanh(pre));
}

Var score_all(Graph& g, const ScorerVars& scorer, Var memory, Var s_prev, Var coverage) {
  Var query = g.add(g.matvec(scorer.w_query, s_prev), scorer.b);
  Var pre = g.add_row(memory, query);
  if (coverage.valid()) pre = g.add(pre, g.outer(coverage, scorer.w_cov));
  return g.matvec(g.tanh(pre), scorer.v);
}

Var section_weights(Graph& g, const ScorerVars& scorer, const EncodedDocument& enc, Var s_prev) {
  return g.softmax_masked(score_all(g, scorer, enc.section_memory, s_prev), enc.section_mask);
}

Var word_weights(Graph& g, const ScorerVars& scorer, const EncodedDocument& enc, Var beta, Var coverage,
                 Var s_prev) {
  Var raw = score_all(g, scorer, enc.word_memory, s_prev, coverage);
  Var scaled = g.mul(raw, g.gather(beta, enc.section_of_word));
  return g.softmax_masked(scaled, enc.word_mask);
}

}  // namespace strata
