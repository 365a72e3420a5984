#pragma once

#include "strata/encoder.hpp"
#include "strata/graph.hpp"
#include "strata/model.hpp"

namespace strata {

/// Additive score of one encoder state against the previous decoder state:
///   v^T tanh(W_state h + W_query s_prev [+ w_cov * cov] + b)
/// `coverage` is a [1] scalar or an invalid Var (coverage off).
Var score(Graph& g, const ScorerVars& scorer, Var h, Var s_prev, Var coverage = {});

/// Batched form of score() over every row of a precomputed memory
/// (memory = states W_state^T). `coverage` is [K] or invalid. Returns [K].
Var score_all(Graph& g, const ScorerVars& scorer, Var memory, Var s_prev, Var coverage = {});

/// beta_j = softmax over real sections of score(h'_j, s_prev).
Var section_weights(Graph& g, const ScorerVars& scorer, const EncodedDocument& enc, Var s_prev);

/// alpha_(j,i) = softmax over all real (j,i) of beta_j * score(h_(j,i), cov_(j,i), s_prev).
/// One joint normalization across sections; beta scales the logits. Throws
/// std::invalid_argument("empty attention support") if no word is real.
Var word_weights(Graph& g, const ScorerVars& scorer, const EncodedDocument& enc, Var beta, Var coverage,
                 Var s_prev);

/// c_t = sum over (j,i) of alpha_(j,i) h_(j,i).
inline Var context_vector(Graph& g, Var alpha, Var word_states) { return g.matvec_t(word_states, alpha); }

/// cov' = cov + alpha. Initial coverage is zeros.
inline Var update_coverage(Graph& g, Var coverage, Var alpha) { return g.add(coverage, alpha); }

}  // namespace strata
