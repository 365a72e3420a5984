#pragma once

#include <span>
#include <utility>
#include <vector>

#include "strata/graph.hpp"
#include "strata/model.hpp"
#include "strata/vocab.hpp"

namespace strata {

struct LstmState {
  Var h;
  Var c;
};

/// One LSTM step without peepholes:
///   [i f o g] = W [x; h] + b,  c' = sig(f) c + sig(i) tanh(g),  h' = sig(o) tanh(c')
LstmState lstm_step(Graph& g, const LstmVars& lstm, Var x, const LstmState& prev);
LstmState lstm_zero_state(Graph& g, std::size_t hidden);

/// h = relu(W [h_fwd; h_bwd] + b)
Var combine_states(Graph& g, const CombineVars& combine, Var h_fwd, Var h_bwd);

struct SectionEncoding {
  std::vector<Var> word_states;  // one per position; zero constants at padded positions
  Var summary;                   // combine(final forward, final backward)
};

/// Runs the shared word-level BiLSTM over the real (mask = true) positions of
/// one section. Throws on an empty mask.
SectionEncoding encode_section(Graph& g, const ModelVars& m, std::span<const std::size_t> ids,
                               const std::vector<bool>& mask);

/// Everything the decoder reads from the source, laid out as a flat grid of
/// sections x max_len word slots.
struct EncodedDocument {
  Var word_states;     // [N*M, H]
  Var section_states;  // [N, H]  section-level BiLSTM outputs h'_j
  Var doc_vector;      // [H]
  Var word_memory;     // [N*M, A]  word scorer's W_state h, computed once per document
  Var section_memory;  // [N, A]
  std::vector<bool> word_mask;
  std::vector<bool> section_mask;
  std::vector<std::size_t> section_of_word;
  std::vector<std::size_t> ext_ids;
  std::size_t ext_size = 0;
  std::size_t sections = 0;
  std::size_t max_len = 0;
};

/// Section-level BiLSTM over the real sections' summaries. Produces the
/// contextualized section states and the document vector d; word states are
/// stacked unchanged. Attention memories are precomputed here as well.
EncodedDocument encode_document(Graph& g, const ModelVars& m, const std::vector<SectionEncoding>& sections,
                                const PaddedSource& src);

/// encode_section for every real section followed by encode_document.
EncodedDocument encode(Graph& g, const ModelVars& m, const PaddedSource& src);

/// Plain-value copy of an EncodedDocument, re-importable into another graph
/// as constants (used by inference so each step can use a fresh graph).
struct FrozenEncoding {
  Tensor word_states, section_states, doc_vector, word_memory, section_memory;
  EncodedDocument layout;  // masks and ids; Vars inside are not meaningful
};

FrozenEncoding freeze(const Graph& g, const EncodedDocument& enc);
EncodedDocument thaw(Graph& g, const FrozenEncoding& frozen);

}  // namespace strata
