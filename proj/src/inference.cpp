#include "strata/inference.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace strata {

namespace {

Var import(Graph& g, const std::vector<double>& v) { return g.constant({v.size()}, v); }

DecoderSnapshot snapshot(const Graph& g, const DecoderStepState& s) {
  DecoderSnapshot out{g.copy(s.lstm.h), g.copy(s.lstm.c), g.copy(s.context), {}};
  if (s.coverage.valid()) out.coverage = g.copy(s.coverage);
  return out;
}

DecoderStepState restore(Graph& g, const DecoderSnapshot& s) {
  DecoderStepState st;
  st.lstm = {import(g, s.h), import(g, s.c)};
  st.context = import(g, s.context);
  if (!s.coverage.empty()) st.coverage = import(g, s.coverage);
  return st;
}

bool stops(std::size_t token) { return token == Vocabulary::kStop; }

std::vector<std::size_t> strip(std::vector<std::size_t> tokens) {
  if (!tokens.empty() && stops(tokens.back())) tokens.pop_back();
  return tokens;
}

}  // namespace

FrozenEncoding StepRunner::encode(const PaddedSource& src) {
  Graph g;
  ModelVars m = model_.bind(g);
  return freeze(g, strata::encode(g, m, src));
}

DecoderSnapshot StepRunner::initial(const FrozenEncoding& enc) {
  Graph g;
  ModelVars m = model_.bind(g);
  return snapshot(g, initial_state(g, m, thaw(g, enc), mode_));
}

std::vector<StepRunner::Result> StepRunner::step(const FrozenEncoding& enc,
                                                 const std::vector<const DecoderSnapshot*>& states,
                                                 const std::vector<std::size_t>& prev_tokens) {
  if (states.size() != prev_tokens.size()) throw std::invalid_argument("StepRunner::step: size mismatch");
  Graph g;
  ModelVars m = model_.bind(g);
  EncodedDocument doc = thaw(g, enc);
  std::vector<Result> out;
  out.reserve(states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    StepOutput o = decode_step(g, m, doc, restore(g, *states[k]), prev_tokens[k], mode_);
    out.push_back({snapshot(g, o.state), g.copy(o.final_dist)});
  }
  return out;
}

std::vector<std::size_t> greedy_decode(StepRunner& runner, const FrozenEncoding& enc, std::size_t max_len) {
  DecoderSnapshot state = runner.initial(enc);
  std::vector<std::size_t> tokens;
  std::size_t prev = Vocabulary::kStart;
  while (tokens.size() < max_len) {
    auto r = runner.step(enc, {&state}, {prev});
    const auto& dist = r[0].distribution;
    // max_element returns the first maximum, i.e. the smallest id on ties.
    prev = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
    tokens.push_back(prev);
    state = std::move(r[0].state);
    if (stops(prev)) break;
  }
  return strip(tokens);
}

std::vector<std::size_t> beam_search(StepRunner& runner, const FrozenEncoding& enc, std::size_t beam,
                                     std::size_t max_len, std::vector<Hypothesis>* finished_out) {
  if (beam < 1) throw std::invalid_argument("beam_search: beam must be at least 1");
  if (max_len < 1) throw std::invalid_argument("beam_search: max_len must be at least 1");
  std::vector<Hypothesis> live(1);
  live[0].state = runner.initial(enc);
  std::vector<Hypothesis> finished;

  struct Candidate {
    double log_prob;
    std::size_t token;
    std::size_t parent;
  };

  while (!live.empty()) {
    std::vector<const DecoderSnapshot*> states;
    std::vector<std::size_t> prev;
    for (const auto& h : live) {
      states.push_back(&h.state);
      prev.push_back(h.tokens.empty() ? Vocabulary::kStart : h.tokens.back());
    }
    auto results = runner.step(enc, states, prev);

    std::vector<Candidate> cands;
    for (std::size_t k = 0; k < live.size(); ++k) {
      const auto& dist = results[k].distribution;
      for (std::size_t w = 0; w < dist.size(); ++w)
        if (dist[w] > 0.0) cands.push_back({live[k].log_prob + std::log(dist[w]), w, k});
    }
    const std::size_t keep = std::min(beam, cands.size());
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
                        if (a.token != b.token) return a.token < b.token;
                        return a.parent < b.parent;
                      });

    std::vector<Hypothesis> next;
    for (std::size_t i = 0; i < keep; ++i) {
      const Candidate& c = cands[i];
      Hypothesis h;
      h.tokens = live[c.parent].tokens;
      h.tokens.push_back(c.token);
      h.log_prob = c.log_prob;
      h.state = results[c.parent].state;
      h.finished = stops(c.token) || h.tokens.size() >= max_len;
      (h.finished ? finished : next).push_back(std::move(h));
    }
    live = std::move(next);
  }

  auto best = std::max_element(finished.begin(), finished.end(), [](const Hypothesis& a, const Hypothesis& b) {
    return a.normalized_score() < b.normalized_score();  // first maximum wins ties
  });
  auto result = strip(best->tokens);
  if (finished_out) *finished_out = std::move(finished);
  return result;
}

double sequence_log_prob(StepRunner& runner, const FrozenEncoding& enc, const std::vector<std::size_t>& tokens) {
  DecoderSnapshot state = runner.initial(enc);
  std::size_t prev = Vocabulary::kStart;
  double total = 0.0;
  for (auto t : tokens) {
    auto r = runner.step(enc, {&state}, {prev});
    total += std::log(r[0].distribution.at(t));
    state = std::move(r[0].state);
    prev = t;
  }
  return total;
}

std::vector<std::string> summarize(Model& model, const EncodedInput& input, const Vocabulary& vocab,
                                   std::size_t beam, std::size_t max_len, bool greedy) {
  StepRunner runner(model, {model.config().coverage, model.config().flat});
  auto enc = runner.encode(pad_source(input));
  auto ids = greedy ? greedy_decode(runner, enc, max_len) : beam_search(runner, enc, beam, max_len);
  return restore_tokens(ids, vocab, input.ext);
}

}  // namespace strata
