#include "strata/encoder.hpp"

#include <stdexcept>

namespace strata {

LstmState lstm_zero_state(Graph& g, std::size_t hidden) { return {g.zeros({hidden}), g.zeros({hidden})}; }

LstmState lstm_step(Graph& g, const LstmVars& lstm, Var x, const LstmState& prev) {
  const std::size_t H = lstm.hidden;
  Var gates = g.add(g.matvec(lstm.w, g.concat({x, prev.h})), lstm.b);
  Var in = g.sigmoid(g.slice(gates, 0, H));
  Var forget = g.sigmoid(g.slice(gates, H, H));
  Var out = g.sigmoid(g.slice(gates, 2 * H, H));
  Var cand = g.tanh(g.slice(gates, 3 * H, H));
  Var c = g.add(g.mul(forget, prev.c), g.mul(in, cand));
  Var h = g.mul(out, g.tanh(c));
  return {h, c};
}

Var combine_states(Graph& g, const CombineVars& combine, Var h_fwd, Var h_bwd) {
  return g.relu(g.add(g.matvec(combine.w, g.concat({h_fwd, h_bwd})), combine.b));
}

SectionEncoding encode_section(Graph& g, const ModelVars& m, std::span<const std::size_t> ids,
                               const std::vector<bool>& mask) {
  if (mask.size() != ids.size()) throw std::invalid_argument("encode_section: mask length mismatch");
  std::vector<std::size_t> real;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (mask[i]) real.push_back(i);
  if (real.empty()) throw std::invalid_argument("encode_section: empty section mask");
  const std::size_t H = m.word_fwd.hidden;

  std::vector<Var> emb(real.size());
  for (std::size_t k = 0; k < real.size(); ++k) emb[k] = g.lookup(m.embedding, ids[real[k]]);

  std::vector<Var> fwd(real.size()), bwd(real.size());
  LstmState s = lstm_zero_state(g, H);
  for (std::size_t k = 0; k < real.size(); ++k) fwd[k] = (s = lstm_step(g, m.word_fwd, emb[k], s)).h;
  s = lstm_zero_state(g, H);
  for (std::size_t k = real.size(); k-- > 0;) bwd[k] = (s = lstm_step(g, m.word_bwd, emb[k], s)).h;

  SectionEncoding out;
  Var zero = g.zeros({H});
  out.word_states.assign(ids.size(), zero);
  for (std::size_t k = 0; k < real.size(); ++k)
    out.word_states[real[k]] = combine_states(g, m.word_combine, fwd[k], bwd[k]);
  out.summary = combine_states(g, m.word_combine, fwd.back(), bwd.front());
  return out;
}

EncodedDocument encode_document(Graph& g, const ModelVars& m, const std::vector<SectionEncoding>& sections,
                                const PaddedSource& src) {
  const std::size_t N = src.sections, M = src.max_len, H = m.sec_fwd.hidden;
  if (sections.size() != N) throw std::invalid_argument("encode_document: section count mismatch");
  std::vector<std::size_t> real;
  for (std::size_t j = 0; j < N; ++j)
    if (src.section_mask[j]) real.push_back(j);
  if (real.empty()) throw std::invalid_argument("encode_document: no sections");

  std::vector<Var> fwd(real.size()), bwd(real.size());
  LstmState s = lstm_zero_state(g, H);
  for (std::size_t k = 0; k < real.size(); ++k)
    fwd[k] = (s = lstm_step(g, m.sec_fwd, sections[real[k]].summary, s)).h;
  s = lstm_zero_state(g, H);
  for (std::size_t k = real.size(); k-- > 0;)
    bwd[k] = (s = lstm_step(g, m.sec_bwd, sections[real[k]].summary, s)).h;

  Var zero = g.zeros({H});
  std::vector<Var> sec_rows(N, zero);
  for (std::size_t k = 0; k < real.size(); ++k) sec_rows[real[k]] = combine_states(g, m.sec_combine, fwd[k], bwd[k]);

  std::vector<Var> word_rows;
  word_rows.reserve(N * M);
  for (std::size_t j = 0; j < N; ++j) {
    if (sections[j].word_states.empty()) {
      word_rows.insert(word_rows.end(), M, zero);
    } else {
      if (sections[j].word_states.size() != M) throw std::invalid_argument("encode_document: section width mismatch");
      word_rows.insert(word_rows.end(), sections[j].word_states.begin(), sections[j].word_states.end());
    }
  }

  EncodedDocument enc;
  enc.word_states = g.stack_rows(word_rows);
  enc.section_states = g.stack_rows(sec_rows);
  enc.doc_vector = combine_states(g, m.sec_combine, fwd.back(), bwd.front());
  enc.word_memory = g.matmul_nt(enc.word_states, m.word_attn.w_state);
  enc.section_memory = g.matmul_nt(enc.section_states, m.sec_attn.w_state);
  enc.word_mask = src.word_mask;
  enc.section_mask = src.section_mask;
  enc.section_of_word.resize(N * M);
  for (std::size_t k = 0; k < N * M; ++k) enc.section_of_word[k] = k / M;
  enc.ext_ids = src.ext_ids;
  enc.ext_size = src.ext_size;
  enc.sections = N;
  enc.max_len = M;
  return enc;
}

EncodedDocument encode(Graph& g, const ModelVars& m, const PaddedSource& src) {
  std::vector<SectionEncoding> secs(src.sections);
  for (std::size_t j = 0; j < src.sections; ++j) {
    if (!src.section_mask[j]) continue;
    auto off = static_cast<std::ptrdiff_t>(j * src.max_len);
    std::span<const std::size_t> ids(src.base_ids.data() + off, src.max_len);
    std::vector<bool> mask(src.word_mask.begin() + off, src.word_mask.begin() + off + static_cast<std::ptrdiff_t>(src.max_len));
    secs[j] = encode_section(g, m, ids, mask);
  }
  return encode_document(g, m, secs, src);
}

namespace {
Tensor snapshot(const Graph& g, Var v) { return Tensor(g.shape(v), g.copy(v)); }
}  // namespace

FrozenEncoding freeze(const Graph& g, const EncodedDocument& enc) {
  FrozenEncoding f{snapshot(g, enc.word_states), snapshot(g, enc.section_states), snapshot(g, enc.doc_vector),
                   snapshot(g, enc.word_memory), snapshot(g, enc.section_memory), enc};
  f.layout.word_states = f.layout.section_states = f.layout.doc_vector = Var{};
  f.layout.word_memory = f.layout.section_memory = Var{};
  return f;
}

EncodedDocument thaw(Graph& g, const FrozenEncoding& f) {
  EncodedDocument enc = f.layout;
  enc.word_states = g.constant(f.word_states);
  enc.section_states = g.constant(f.section_states);
  enc.doc_vector = g.constant(f.doc_vector);
  enc.word_memory = g.constant(f.word_memory);
  enc.section_memory = g.constant(f.section_memory);
  return enc;
}

}  // namespace strata
