#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "strata/graph.hpp"

namespace strata {

struct ModelConfig {
  std::size_t vocab_size = 50000;
  std::size_t embedding = 128;
  std::size_t hidden = 256;
  std::size_t mixing = 0;  // width of linear(s_t, c_t) before the vocabulary projection; 0 = hidden
  bool coverage = false;   // coverage input to the word scorer
  bool flat = false;       // whole document as one section, section weights fixed to 1
  double init_range = 0.1;

  std::size_t mixing_width() const { return mixing ? mixing : hidden; }
  std::map<std::string, std::string> to_metadata() const;
  static ModelConfig from_metadata(const std::map<std::string, std::string>& md);
};

struct LstmVars {
  Var w;  // [4H, I+H], gate rows ordered input, forget, output, candidate
  Var b;  // [4H]
  std::size_t hidden = 0;
};

struct CombineVars {
  Var w;  // [H, 2H]
  Var b;  // [H]
};

struct ScorerVars {
  Var w_state;  // [A, H] applied to encoder states
  Var w_query;  // [A, H] applied to the previous decoder state
  Var b;        // [A]
  Var v;        // [A]
  Var w_cov;    // [A] coverage weights; invalid for the section scorer
};

/// Graph leaves for every model parameter.
struct ModelVars {
  Var embedding;
  LstmVars word_fwd, word_bwd, sec_fwd, sec_bwd, decoder;
  CombineVars word_combine, sec_combine;
  Var init_w, init_b;
  ScorerVars word_attn, sec_attn;
  Var out_state, out_context, out_bias, out_vocab;
  Var switch_state, switch_context, switch_input, switch_bias;
};

class Model {
 public:
  Model(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ModelConfig& config() { return config_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  ModelVars bind(Graph& g);

 private:
  ModelConfig config_;
  ParameterStore params_;
};

/// Deterministic uniform double in [0, 1) from a 64-bit generator output.
inline double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

}  // namespace strata
