#include "strata/training.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <regex>
#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "strata/checkpoint.hpp"
#include "strata/encoder.hpp"

namespace strata {

void TrainConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(batch_size, "batch_size");
  positive(hidden, "hidden");
  positive(embedding, "embedding");
  positive(max_doc, "max_doc");
  positive(max_sec, "max_sec");
  positive(max_sections, "max_sections");
  positive(max_decode, "max_decode");
  positive(beam, "beam");
  positive(epochs, "epochs");
  positive(keep_checkpoints, "keep_checkpoints");
  positive(checkpoint_every, "checkpoint_every");
  if (vocab_cap <= 4) throw std::invalid_argument("vocab_cap must exceed the 4 special tokens");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be positive");
  if (!(initial_accumulator > 0.0)) throw std::invalid_argument("initial_accumulator must be positive");
  if (coverage_last_epochs > epochs) throw std::invalid_argument("coverage_last_epochs must not exceed epochs");
  if (clip_norm < 0.0) throw std::invalid_argument("clip_norm must be nonnegative");
  if (coverage_loss_weight < 0.0) throw std::invalid_argument("coverage_loss_weight must be nonnegative");
}

std::vector<Batch> make_batches(const std::vector<EncodedInput>& corpus, std::size_t batch_size, std::uint64_t seed) {
  if (batch_size == 0) throw std::invalid_argument("make_batches: batch_size must be positive");
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    auto j = static_cast<std::size_t>(unit_uniform(rng()) * static_cast<double>(i));
    std::swap(order[i - 1], order[std::min(j, i - 1)]);
  }
  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    Batch b;
    b.index = batches.size();
    b.documents.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                       order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), start + batch_size)));
    for (auto d : b.documents) {
      const auto& in = corpus[d];
      b.max_sections = std::max(b.max_sections, in.base_ids.size());
      for (const auto& s : in.base_ids) b.max_len = std::max(b.max_len, s.size());
      b.max_target = std::max(b.max_target, in.target.size());
    }
    for (auto d : b.documents) {
      const auto& in = corpus[d];
      b.sources.push_back(pad_source(in, b.max_sections, b.max_len));
      auto t = in.target;
      std::vector<bool> mask(b.max_target, false);
      std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(t.size()), true);
      t.resize(b.max_target, Vocabulary::kPad);
      b.targets.push_back(std::move(t));
      b.target_mask.push_back(std::move(mask));
      b.ext_sizes.push_back(in.ext.size());
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

Var nll_loss(Graph& g, const std::vector<Var>& distributions, const std::vector<std::size_t>& targets,
             const std::vector<bool>& mask) {
  if (targets.size() != mask.size()) throw std::invalid_argument("nll_loss: targets and mask differ in length");
  std::vector<Var> terms;
  std::size_t k = 0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (!mask[t]) continue;
    if (k >= distributions.size()) throw std::invalid_argument("nll_loss: fewer distributions than unmasked targets");
    Var dist = distributions[k++];
    if (targets[t] >= g.size(dist))
      throw std::out_of_range("nll_loss: target id " + std::to_string(targets[t]) + " outside distribution of size " +
                              std::to_string(g.size(dist)));
    terms.push_back(g.log(g.pick(dist, targets[t])));
  }
  if (terms.empty()) throw std::invalid_argument("nll_loss: no unmasked targets");
  return g.affine(g.add_n(terms), -1.0 / static_cast<double>(terms.size()), 0.0);
}

SequenceLoss teacher_forced_loss(Graph& g, const ModelVars& m, const PaddedSource& src,
                                 const std::vector<std::size_t>& target, const std::vector<bool>& target_mask,
                                 const DecodeMode& mode, double coverage_loss_weight) {
  EncodedDocument enc = encode(g, m, src);
  DecoderStepState state = initial_state(g, m, enc, mode);
  SequenceLoss out;
  std::vector<Var> dists;
  std::vector<Var> cov_terms;
  std::size_t prev = Vocabulary::kStart;
  for (std::size_t t = 0; t < target.size() && target_mask[t]; ++t) {
    StepOutput step = decode_step(g, m, enc, state, prev, mode);
    if (mode.coverage && coverage_loss_weight > 0.0)
      cov_terms.push_back(g.sum(g.minimum(step.alpha, state.coverage)));
    dists.push_back(step.final_dist);
    state = step.state;
    prev = target[t];
    out.steps.push_back(std::move(step));
  }
  std::vector<bool> used(dists.size(), true);
  std::vector<std::size_t> gold(target.begin(), target.begin() + static_cast<std::ptrdiff_t>(dists.size()));
  out.loss = nll_loss(g, dists, gold, used);
  if (!cov_terms.empty()) {
    Var cov = g.affine(g.add_n(cov_terms), coverage_loss_weight / static_cast<double>(cov_terms.size()), 0.0);
    out.loss = g.add(out.loss, cov);
  }
  return out;
}

ModelConfig model_config_for(const TrainConfig& cfg, const Vocabulary& vocab) {
  ModelConfig mc;
  mc.vocab_size = vocab.size();
  mc.embedding = cfg.embedding;
  mc.hidden = cfg.hidden;
  mc.mixing = cfg.mixing;
  mc.flat = cfg.flat_encoder;
  mc.coverage = false;
  return mc;
}

std::vector<EncodedInput> encode_corpus(const std::vector<Document>& docs, const Vocabulary& vocab,
                                        const TrainConfig& cfg) {
  std::vector<EncodedInput> out;
  out.reserve(docs.size());
  const TruncationLimits limits{cfg.max_doc, cfg.max_sec, cfg.max_sections};
  for (const auto& d : docs) {
    auto in = encode_document(truncate(d, limits), vocab, cfg.max_decode);
    if (in.base_ids.empty()) continue;
    out.push_back(cfg.flat_encoder ? flatten(in) : std::move(in));
  }
  return out;
}

Trainer::Trainer(Model& model, const TrainConfig& cfg)
    : model_(model), cfg_(cfg), optimizer_(cfg.learning_rate, cfg.initial_accumulator) {
  optimizer_.init(model_.params());
}

double Trainer::batch_loss(const Batch& batch, bool coverage, bool backprop) {
  const DecodeMode mode{coverage, model_.config().flat};
  const double scale = 1.0 / static_cast<double>(batch.sources.size());
  double total = 0.0;
  for (std::size_t k = 0; k < batch.sources.size(); ++k) {
    Graph g;
    ModelVars m = model_.bind(g);
    auto seq = teacher_forced_loss(g, m, batch.sources[k], batch.targets[k], batch.target_mask[k], mode,
                                   cfg_.coverage_loss_weight);
    const double l = g.item(seq.loss);
    if (!std::isfinite(l)) {
      std::string norms;
      for (std::size_t i = 0; i < model_.params().size(); ++i) {
        double sq = 0.0;
        for (double v : model_.params().at(i).data()) sq += v * v;
        norms += fmt::format("\n  {} {:.6g}", model_.params().name(i), std::sqrt(sq));
      }
      throw std::runtime_error(fmt::format("non-finite loss at step {} in batch {} (document {}); parameter norms:{}",
                                           step_, batch.index, batch.documents[k], norms));
    }
    total += l * scale;
    if (backprop) g.backward(g.affine(seq.loss, scale, 0.0));
  }
  return total;
}

double Trainer::evaluate_batch(const Batch& batch, bool coverage) { return batch_loss(batch, coverage, false); }

double Trainer::train_batch(const Batch& batch, bool coverage) {
  auto& params = model_.params();
  params.zero_grad();
  const double loss = batch_loss(batch, coverage, true);
  // PAD row stays frozen.
  auto emb_grad = params.get("embedding").grad();
  std::fill(emb_grad.begin(), emb_grad.begin() + static_cast<std::ptrdiff_t>(model_.config().embedding), 0.0);
  clip_grad_norm(params, cfg_.clip_norm);
  adagrad_step(params, optimizer_);
  ++step_;
  return loss;
}

void Trainer::enable_coverage() {
  auto w = model_.params().get("attention.word.w_cov").data();
  std::fill(w.begin(), w.end(), 0.0);
  model_.config().coverage = true;
}

void Trainer::save(const std::filesystem::path& path, std::size_t epoch) const {
  auto md = model_.config().to_metadata();
  md["epoch"] = std::to_string(epoch);
  save_checkpoint(path, step_, md, model_.params(), &optimizer_);
}

void Trainer::rotate_checkpoints(const std::filesystem::path& dir, std::size_t epoch) {
  auto path = dir / fmt::format("ckpt-{:09d}.bin", step_);
  save(path, epoch);
  if (written_.empty() || written_.back() != path) written_.push_back(path);
  while (written_.size() > cfg_.keep_checkpoints) {
    std::filesystem::remove(written_.front());
    written_.erase(written_.begin());
  }
}

std::vector<StepRecord> Trainer::train(const std::vector<EncodedInput>& corpus, const TrainOptions& options) {
  cfg_.validate();
  if (corpus.empty()) throw std::invalid_argument("train: empty corpus");
  if (options.checkpoint_dir) std::filesystem::create_directories(*options.checkpoint_dir);
  std::vector<StepRecord> records;
  const std::size_t switch_epoch = cfg_.first_coverage_epoch();
  for (std::size_t epoch = 1; epoch <= cfg_.epochs; ++epoch) {
    const bool coverage = epoch >= switch_epoch;
    if (coverage && !model_.config().coverage) {
      spdlog::info("epoch {}: enabling coverage", epoch);
      enable_coverage();
    }
    auto batches = make_batches(corpus, cfg_.batch_size, cfg_.seed + epoch);
    double epoch_total = 0.0;
    for (const auto& batch : batches) {
      StepRecord rec{step_ + 1, epoch, train_batch(batch, coverage), coverage};
      epoch_total += rec.loss;
      if (options.metrics)
        *options.metrics << fmt::format("{}\t{}\t{}\t{}\n", rec.step, rec.epoch, rec.loss, rec.coverage ? 1 : 0);
      if (options.on_step) options.on_step(rec);
      records.push_back(rec);
      if (options.checkpoint_dir && step_ % cfg_.checkpoint_every == 0) rotate_checkpoints(*options.checkpoint_dir, epoch);
      if (options.max_steps && step_ >= options.max_steps) break;
    }
    spdlog::info("epoch {} mean loss {:.6f}", epoch, epoch_total / static_cast<double>(batches.size()));
    if (options.checkpoint_dir) rotate_checkpoints(*options.checkpoint_dir, epoch);
    if (options.max_steps && step_ >= options.max_steps) break;
  }
  if (options.metrics) options.metrics->flush();
  return records;
}

std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) return std::nullopt;
  std::optional<std::filesystem::path> best;
  static const std::regex pattern(R"(ckpt-\d+\.bin)");
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (!std::regex_match(name, pattern)) continue;
    if (!best || name > best->filename().string()) best = e.path();
  }
  return best;
}

}  // namespace strata
