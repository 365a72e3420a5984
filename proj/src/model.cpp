#include "strata/model.hpp"

#include <random>
#include <stdexcept>

namespace strata {

namespace {

std::size_t get_size(const std::map<std::string, std::string>& md, const std::string& key) {
  auto it = md.find(key);
  if (it == md.end()) throw std::runtime_error("checkpoint metadata missing '" + key + "'");
  return static_cast<std::size_t>(std::stoull(it->second));
}

bool get_bool(const std::map<std::string, std::string>& md, const std::string& key) {
  auto it = md.find(key);
  return it != md.end() && it->second == "true";
}

void add_lstm(ParameterStore& p, const std::string& prefix, std::size_t input, std::size_t hidden) {
  p.add(prefix + ".w", {4 * hidden, input + hidden});
  p.add(prefix + ".b", {4 * hidden});
}

}  // namespace

std::map<std::string, std::string> ModelConfig::to_metadata() const {
  return {{"vocab_size", std::to_string(vocab_size)},
          {"embedding", std::to_string(embedding)},
          {"hidden", std::to_string(hidden)},
          {"mixing", std::to_string(mixing_width())},
          {"coverage", coverage ? "true" : "false"},
          {"flat_encoder", flat ? "true" : "false"}};
}

ModelConfig ModelConfig::from_metadata(const std::map<std::string, std::string>& md) {
  ModelConfig c;
  c.vocab_size = get_size(md, "vocab_size");
  c.embedding = get_size(md, "embedding");
  c.hidden = get_size(md, "hidden");
  c.mixing = get_size(md, "mixing");
  c.coverage = get_bool(md, "coverage");
  c.flat = get_bool(md, "flat_encoder");
  return c;
}

Model::Model(const ModelConfig& config, std::uint64_t seed) : config_(config) {
  const std::size_t V = config.vocab_size, E = config.embedding, H = config.hidden, A = H,
                    W = config.mixing_width();
  if (V < 5 || E == 0 || H == 0) throw std::invalid_argument("model: vocab_size >= 5, embedding > 0, hidden > 0 required");
  auto& p = params_;
  p.add("embedding", {V, E});
  add_lstm(p, "encoder.word.fwd", E, H);
  add_lstm(p, "encoder.word.bwd", E, H);
  p.add("encoder.word.combine.w", {H, 2 * H});
  p.add("encoder.word.combine.b", {H});
  add_lstm(p, "encoder.section.fwd", H, H);
  add_lstm(p, "encoder.section.bwd", H, H);
  p.add("encoder.section.combine.w", {H, 2 * H});
  p.add("encoder.section.combine.b", {H});
  p.add("decoder.init.w", {H, H});
  p.add("decoder.init.b", {H});
  p.add("attention.word.w_state", {A, H});
  p.add("attention.word.w_query", {A, H});
  p.add("attention.word.b", {A});
  p.add("attention.word.v", {A});
  p.add("attention.word.w_cov", {A});
  p.add("attention.section.w_state", {A, H});
  p.add("attention.section.w_query", {A, H});
  p.add("attention.section.b", {A});
  p.add("attention.section.v", {A});
  add_lstm(p, "decoder.lstm", E + H, H);
  p.add("output.w_state", {W, H});
  p.add("output.w_context", {W, H});
  p.add("output.b", {W});
  p.add("output.vocab", {V, W});
  p.add("switch.w_state", {1, H});
  p.add("switch.w_context", {1, H});
  p.add("switch.w_input", {1, E});
  p.add("switch.b", {1});

  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < p.size(); ++i) {
    Tensor& t = p.at(i);
    const auto& name = p.name(i);
    const bool bias = t.shape().size() == 1 && name != "attention.word.v" && name != "attention.section.v";
    if (bias || name == "attention.word.w_cov") continue;  // zeros
    for (double& x : t.data()) x = (2.0 * unit_uniform(rng()) - 1.0) * config.init_range;
  }
  for (const char* lstm : {"encoder.word.fwd.b", "encoder.word.bwd.b", "encoder.section.fwd.b",
                           "encoder.section.bwd.b", "decoder.lstm.b"}) {
    auto b = p.get(lstm).data();
    for (std::size_t i = H; i < 2 * H; ++i) b[i] = 1.0;  // forget gate
  }
}

ModelVars Model::bind(Graph& g) {
  auto P = [&](const char* n) { return g.parameter(params_.get(n)); };
  const std::size_t H = config_.hidden;
  ModelVars m;
  m.embedding = P("embedding");
  m.word_fwd = {P("encoder.word.fwd.w"), P("encoder.word.fwd.b"), H};
  m.word_bwd = {P("encoder.word.bwd.w"), P("encoder.word.bwd.b"), H};
  m.word_combine = {P("encoder.word.combine.w"), P("encoder.word.combine.b")};
  m.sec_fwd = {P("encoder.section.fwd.w"), P("encoder.section.fwd.b"), H};
  m.sec_bwd = {P("encoder.section.bwd.w"), P("encoder.section.bwd.b"), H};
  m.sec_combine = {P("encoder.section.combine.w"), P("encoder.section.combine.b")};
  m.init_w = P("decoder.init.w");
  m.init_b = P("decoder.init.b");
  m.word_attn = {P("attention.word.w_state"), P("attention.word.w_query"), P("attention.word.b"),
                 P("attention.word.v"), P("attention.word.w_cov")};
  m.sec_attn = {P("attention.section.w_state"), P("attention.section.w_query"), P("attention.section.b"),
                P("attention.section.v"), Var{}};
  m.decoder = {P("decoder.lstm.w"), P("decoder.lstm.b"), H};
  m.out_state = P("output.w_state");
  m.out_context = P("output.w_context");
  m.out_bias = P("output.b");
  m.out_vocab = P("output.vocab");
  m.switch_state = P("switch.w_state");
  m.switch_context = P("switch.w_context");
  m.switch_input = P("switch.w_input");
  m.switch_bias = P("switch.b");
  return m;
}

}  // namespace strata
