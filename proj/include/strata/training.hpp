#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "strata/decoder.hpp"
#include "strata/model.hpp"
#include "strata/optim.hpp"
#include "strata/vocab.hpp"

namespace strata {

struct TrainConfig {
  std::size_t batch_size = 16;
  double learning_rate = 0.15;
  double initial_accumulator = 0.1;
  std::size_t hidden = 256;
  std::size_t embedding = 128;
  std::size_t mixing = 0;
  std::size_t vocab_cap = 50000;
  std::size_t max_doc = 2000;
  std::size_t max_sec = 500;
  std::size_t max_sections = 4;
  std::size_t max_decode = 210;
  std::size_t beam = 4;
  std::size_t epochs = 0;  // required
  std::size_t coverage_last_epochs = 2;
  std::uint64_t seed = 1;
  double clip_norm = 2.0;
  double coverage_loss_weight = 0.0;  // sum_i min(alpha_i, cov_i) per step; off by default
  std::size_t checkpoint_every = 1000;
  std::size_t keep_checkpoints = 3;
  bool flat_encoder = false;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  /// 1-based epoch numbers from first_coverage_epoch() on run with coverage.
  std::size_t first_coverage_epoch() const { return epochs - std::min(coverage_last_epochs, epochs) + 1; }
};

/// Documents padded to the batch's own maxima (sections, section length,
/// target length).
struct Batch {
  std::size_t index = 0;
  std::vector<std::size_t> documents;  // indices into the encoded corpus
  std::vector<PaddedSource> sources;
  std::vector<std::vector<std::size_t>> targets;  // padded with PAD
  std::vector<std::vector<bool>> target_mask;
  std::vector<std::size_t> ext_sizes;
  std::size_t max_sections = 0, max_len = 0, max_target = 0;
};

/// Seeded Fisher-Yates shuffle, then consecutive groups of batch_size; the
/// final partial batch is kept.
std::vector<Batch> make_batches(const std::vector<EncodedInput>& corpus, std::size_t batch_size, std::uint64_t seed);

/// Mean over unmasked positions of -log(max(dist[target], 1e-12)). Throws
/// std::out_of_range when a target id is outside its distribution.
Var nll_loss(Graph& g, const std::vector<Var>& distributions, const std::vector<std::size_t>& targets,
             const std::vector<bool>& mask);

struct SequenceLoss {
  Var loss;
  std::vector<StepOutput> steps;
};

/// Teacher-forced unroll over the unmasked prefix of `target`, feeding START
/// first and then the gold previous token.
SequenceLoss teacher_forced_loss(Graph& g, const ModelVars& m, const PaddedSource& src,
                                 const std::vector<std::size_t>& target, const std::vector<bool>& target_mask,
                                 const DecodeMode& mode, double coverage_loss_weight = 0.0);

/// Builds a model sized for `vocab` from the training configuration.
ModelConfig model_config_for(const TrainConfig& cfg, const Vocabulary& vocab);

/// Encodes (and optionally flattens) a preprocessed corpus for training or decoding.
std::vector<EncodedInput> encode_corpus(const std::vector<Document>& docs, const Vocabulary& vocab,
                                        const TrainConfig& cfg);

struct StepRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double loss = 0.0;
  bool coverage = false;
};

struct TrainOptions {
  std::ostream* metrics = nullptr;                   // "step\tepoch\tloss\tcoverage_on" lines
  std::optional<std::filesystem::path> checkpoint_dir;
  std::size_t max_steps = 0;                         // 0 = no limit
  std::function<void(const StepRecord&)> on_step;
};

class Trainer {
 public:
  Trainer(Model& model, const TrainConfig& cfg);

  /// One Adagrad update on a batch; returns the batch's mean loss. Throws
  /// std::runtime_error with batch id and parameter norms on a non-finite loss.
  double train_batch(const Batch& batch, bool coverage);

  /// Mean loss on a batch without updating anything.
  double evaluate_batch(const Batch& batch, bool coverage);

  /// Runs the full epoch schedule (coverage enabled for the last
  /// coverage_last_epochs epochs). Returns every step's loss.
  std::vector<StepRecord> train(const std::vector<EncodedInput>& corpus, const TrainOptions& options = {});

  AdagradState& optimizer() { return optimizer_; }
  std::size_t step() const { return step_; }

  void save(const std::filesystem::path& path, std::size_t epoch) const;

 private:
  double batch_loss(const Batch& batch, bool coverage, bool backprop);
  void enable_coverage();
  void rotate_checkpoints(const std::filesystem::path& dir, std::size_t epoch);

  Model& model_;
  TrainConfig cfg_;
  AdagradState optimizer_;
  std::size_t step_ = 0;
  std::vector<std::filesystem::path> written_;
};

/// Newest "ckpt-*.bin" in a directory, if any.
std::optional<std::filesystem::path> latest_checkpoint(const std::filesystem::path& dir);

}  // namespace strata
