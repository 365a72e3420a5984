#pragma once

#include <string>
#include <vector>

#include "strata/decoder.hpp"
#include "strata/encoder.hpp"
#include "strata/model.hpp"
#include "strata/vocab.hpp"

namespace strata {

/// Decoder state as plain values, so a hypothesis can outlive the graph that
/// produced it.
struct DecoderSnapshot {
  std::vector<double> h, c, context, coverage;  // coverage empty when off
};

struct Hypothesis {
  std::vector<std::size_t> tokens;  // extended space, STOP included when finished by STOP
  double log_prob = 0.0;
  DecoderSnapshot state;
  bool finished = false;

  double normalized_score() const { return tokens.empty() ? log_prob : log_prob / static_cast<double>(tokens.size()); }
};

/// Runs a trained model step by step on frozen encodings. Each call builds
/// a fresh graph, so memory does not grow with the output length.
class StepRunner {
 public:
  StepRunner(Model& model, const DecodeMode& mode) : model_(model), mode_(mode) {}

  FrozenEncoding encode(const PaddedSource& src);
  DecoderSnapshot initial(const FrozenEncoding& enc);

  struct Result {
    DecoderSnapshot state;
    std::vector<double> distribution;  // over the extended vocabulary
  };
  /// Advances every (state, previous token) pair by one step in one graph.
  std::vector<Result> step(const FrozenEncoding& enc, const std::vector<const DecoderSnapshot*>& states,
                           const std::vector<std::size_t>& prev_tokens);

  const DecodeMode& mode() const { return mode_; }

 private:
  Model& model_;
  DecodeMode mode_;
};

/// Argmax decoding; ties go to the smaller id. Returns ids without START/STOP.
std::vector<std::size_t> greedy_decode(StepRunner& runner, const FrozenEncoding& enc, std::size_t max_len);

/// Beam search over the extended distribution. Candidates are ranked by total
/// log-probability, ties broken by smaller token id then earlier hypothesis.
/// Hypotheses that emit STOP or reach max_len are retired; the retired one
/// with the best log-probability per token wins. Returns ids without
/// START/STOP. Throws std::invalid_argument when beam < 1.
std::vector<std::size_t> beam_search(StepRunner& runner, const FrozenEncoding& enc, std::size_t beam,
                                     std::size_t max_len, std::vector<Hypothesis>* finished_out = nullptr);

/// Log-probability of a complete output sequence (ids include STOP when present).
double sequence_log_prob(StepRunner& runner, const FrozenEncoding& enc, const std::vector<std::size_t>& tokens);

/// Convenience: encode, beam search (greedy when beam == 1 is requested via
/// `greedy`), restore strings.
std::vector<std::string> summarize(Model& model, const EncodedInput& input, const Vocabulary& vocab,
                                   std::size_t beam, std::size_t max_len, bool greedy = false);

}  // namespace strata
