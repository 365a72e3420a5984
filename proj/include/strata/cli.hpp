#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

#include "strata/training.hpp"

namespace strata::cli {

/// Everything a command needs. Loaded from a flat key=value file; '#' starts
/// a comment. Relative paths are resolved against the config file's directory.
struct RunConfig {
  TrainConfig train;

  std::filesystem::path raw_corpus;                   // preprocess input
  std::filesystem::path data_dir = "data";            // preprocess output
  std::filesystem::path train_corpus;                 // default data_dir/train.jsonl
  std::filesystem::path eval_corpus;                  // default data_dir/test.jsonl
  std::filesystem::path vocab_path;                   // default data_dir/vocab.txt
  std::filesystem::path checkpoint_dir = "checkpoints";
  std::filesystem::path metrics_log;                  // default checkpoint_dir/metrics.tsv
  std::filesystem::path decode_output = "decoded.jsonl";
  std::filesystem::path report_path = "rouge_report.txt";

  double val_fraction = 0.05;
  double test_fraction = 0.05;
  std::size_t min_doc_tokens = 0;         // 0 = no lower length filter
  std::size_t max_doc_tokens_filter = 0;  // 0 = no upper length filter
  bool greedy = false;                    // decode with argmax instead of beam search
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses key=value text. Unknown keys and malformed values raise ConfigError.
RunConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> checkpoint;
};

/// Runs one of preprocess, build-vocab, train, decode, evaluate. Returns the
/// process exit status: 0 success, 1 configuration or runtime failure (one
/// line on `err`), 2 unknown command (usage on `err`).
int run(const std::string& command, RunConfig config, const Overrides& overrides, std::ostream& out,
        std::ostream& err);

std::string usage();

/// Sets the spdlog level from STRATA_LOG (error, info, debug).
void configure_logging();

/// Split assignment for an article id: 0 train, 1 validation, 2 test.
int split_of(const std::string& article_id, std::uint64_t seed, double val_fraction, double test_fraction);

}  // namespace strata::cli
