#include "strata/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "strata/checkpoint.hpp"
#include "strata/inference.hpp"
#include "strata/rouge.hpp"

namespace strata::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t to_size(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
    auto r = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return static_cast<std::size_t>(r);
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a nonnegative integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    double r = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return r;
  } catch (const std::exception&) {
    throw ConfigError("config: '" + key + "' expects a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config: '" + key + "' expects true/false, got '" + v + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const fs::path&)>;

const std::map<std::string, Setter>& setters() {
  auto size_field = [](std::size_t TrainConfig::*f) {
    return [f](RunConfig& c, const std::string& v, const fs::path&) { c.train.*f = to_size("", v); };
  };
  auto path_field = [](fs::path RunConfig::*f) {
    return [f](RunConfig& c, const std::string& v, const fs::path& base) {
      fs::path p(v);
      c.*f = p.is_relative() && !base.empty() ? base / p : p;
    };
  };
  static const std::map<std::string, Setter> table = {
      {"batch_size", size_field(&TrainConfig::batch_size)},
      {"hidden", size_field(&TrainConfig::hidden)},
      {"embedding", size_field(&TrainConfig::embedding)},
      {"mixing", size_field(&TrainConfig::mixing)},
      {"vocab_cap", size_field(&TrainConfig::vocab_cap)},
      {"max_doc", size_field(&TrainConfig::max_doc)},
      {"max_sec", size_field(&TrainConfig::max_sec)},
      {"max_sections", size_field(&TrainConfig::max_sections)},
      {"max_decode", size_field(&TrainConfig::max_decode)},
      {"beam", size_field(&TrainConfig::beam)},
      {"epochs", size_field(&TrainConfig::epochs)},
      {"coverage_last_epochs", size_field(&TrainConfig::coverage_last_epochs)},
      {"checkpoint_every", size_field(&TrainConfig::checkpoint_every)},
      {"keep_checkpoints", size_field(&TrainConfig::keep_checkpoints)},
      {"seed", [](RunConfig& c, const std::string& v, const fs::path&) { c.train.seed = to_size("seed", v); }},
      {"learning_rate",
       [](RunConfig& c, const std::string& v, const fs::path&) { c.train.learning_rate = to_double("learning_rate", v); }},
      {"initial_accumulator",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.train.initial_accumulator = to_double("initial_accumulator", v);
       }},
      {"clip_norm", [](RunConfig& c, const std::string& v, const fs::path&) { c.train.clip_norm = to_double("clip_norm", v); }},
      {"coverage_loss_weight",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.train.coverage_loss_weight = to_double("coverage_loss_weight", v);
       }},
      {"flat_encoder",
       [](RunConfig& c, const std::string& v, const fs::path&) { c.train.flat_encoder = to_bool("flat_encoder", v); }},
      {"raw_corpus", path_field(&RunConfig::raw_corpus)},
      {"data_dir", path_field(&RunConfig::data_dir)},
      {"train_corpus", path_field(&RunConfig::train_corpus)},
      {"eval_corpus", path_field(&RunConfig::eval_corpus)},
      {"vocab_path", path_field(&RunConfig::vocab_path)},
      {"checkpoint_dir", path_field(&RunConfig::checkpoint_dir)},
      {"metrics_log", path_field(&RunConfig::metrics_log)},
      {"decode_output", path_field(&RunConfig::decode_output)},
      {"report_path", path_field(&RunConfig::report_path)},
      {"val_fraction",
       [](RunConfig& c, const std::string& v, const fs::path&) { c.val_fraction = to_double("val_fraction", v); }},
      {"test_fraction",
       [](RunConfig& c, const std::string& v, const fs::path&) { c.test_fraction = to_double("test_fraction", v); }},
      {"min_doc_tokens",
       [](RunConfig& c, const std::string& v, const fs::path&) { c.min_doc_tokens = to_size("min_doc_tokens", v); }},
      {"max_doc_tokens_filter",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.max_doc_tokens_filter = to_size("max_doc_tokens_filter", v);
       }},
      {"greedy", [](RunConfig& c, const std::string& v, const fs::path&) { c.greedy = to_bool("greedy", v); }},
  };
  return table;
}

void fill_defaults(RunConfig& c, const fs::path& base) {
  auto rebase = [&](fs::path& p) {
    if (!p.empty() && p.is_relative() && !base.empty()) p = base / p;
  };
  rebase(c.data_dir);
  rebase(c.checkpoint_dir);
  rebase(c.decode_output);
  rebase(c.report_path);
  if (c.train_corpus.empty()) c.train_corpus = c.data_dir / "train.jsonl";
  if (c.eval_corpus.empty()) c.eval_corpus = c.data_dir / "test.jsonl";
  if (c.vocab_path.empty()) c.vocab_path = c.data_dir / "vocab.txt";
  if (c.metrics_log.empty()) c.metrics_log = c.checkpoint_dir / "metrics.tsv";
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw ConfigError(fmt::format("{} not found: {}", what, p.string()));
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// splitmix64 finalizer; FNV alone leaves the high bits nearly constant for
// ids that differ only in their last characters.
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

struct LoadedModel {
  std::unique_ptr<Model> model;
  fs::path path;
};

LoadedModel load_model(const RunConfig& cfg, const Overrides& ov) {
  std::optional<fs::path> path = ov.checkpoint;
  if (!path) path = latest_checkpoint(cfg.checkpoint_dir);
  if (!path || !fs::exists(*path)) throw ConfigError("checkpoint not found");
  auto ck = load_checkpoint(*path);
  auto mc = ModelConfig::from_metadata(ck.metadata);
  auto model = std::make_unique<Model>(mc, 0);
  restore_parameters(ck, model->params());
  for (std::size_t i = 0; i < model->params().size(); ++i) model->params().at(i).set_requires_grad(false);
  return {std::move(model), *path};
}

int cmd_preprocess(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.raw_corpus, "raw corpus");
  if (cfg.val_fraction < 0 || cfg.test_fraction < 0 || cfg.val_fraction + cfg.test_fraction > 1.0)
    throw ConfigError("val_fraction and test_fraction must be nonnegative and sum to at most 1");
  const TrainConfig& t = cfg.train;
  const TruncationLimits limits{t.max_doc, t.max_sec, t.max_sections};
  CorpusReader reader(cfg.raw_corpus);
  std::vector<Document> splits[3];
  std::size_t rejected = 0, filtered = 0;
  double doc_words = 0, summary_words = 0, kept_words = 0;
  std::size_t kept = 0;
  while (auto raw = reader.next()) {
    Document doc;
    try {
      doc = normalize(*raw);
    } catch (const CorpusError& e) {
      ++rejected;
      spdlog::warn("document {}: {}", raw->id, e.what());
      continue;
    }
    const auto n = doc.token_count();
    if ((cfg.min_doc_tokens && n < cfg.min_doc_tokens) || (cfg.max_doc_tokens_filter && n > cfg.max_doc_tokens_filter)) {
      ++filtered;
      continue;
    }
    doc_words += static_cast<double>(n);
    summary_words += static_cast<double>(doc.abstract.size());
    auto cut = truncate(doc, limits);
    kept_words += static_cast<double>(cut.token_count());
    ++kept;
    splits[split_of(doc.id, t.seed, cfg.val_fraction, cfg.test_fraction)].push_back(std::move(cut));
  }
  fs::create_directories(cfg.data_dir);
  write_corpus(cfg.data_dir / "train.jsonl", splits[0]);
  write_corpus(cfg.data_dir / "val.jsonl", splits[1]);
  write_corpus(cfg.data_dir / "test.jsonl", splits[2]);

  auto avg = [&](double total) { return kept ? total / static_cast<double>(kept) : 0.0; };
  std::string stats;
  stats += fmt::format("{:<28} {:>8} {:>22} {:>26}\n", "dataset", "# docs", "avg. doc. length (words)",
                       "avg. summary length (words)");
  stats += fmt::format("{:<28} {:>8} {:>22.1f} {:>26.1f}\n", cfg.raw_corpus.filename().string(), kept, avg(doc_words),
                       avg(summary_words));
  stats += fmt::format("avg. doc. length after truncation: {:.1f}\n", avg(kept_words));
  stats += fmt::format("splits: train {} / validation {} / test {}\n", splits[0].size(), splits[1].size(),
                       splits[2].size());
  stats += fmt::format("skipped malformed records: {}; rejected documents: {}; length-filtered: {}\n",
                       reader.skipped(), rejected, filtered);
  std::ofstream(cfg.data_dir / "stats.txt") << stats;
  out << stats;
  return 0;
}

int cmd_build_vocab(const RunConfig& cfg, std::ostream& out) {
  require_file(cfg.train_corpus, "training corpus");
  auto corpus = load_corpus(cfg.train_corpus);
  auto vocab = Vocabulary::build(corpus.documents, cfg.train.vocab_cap);
  if (cfg.vocab_path.has_parent_path()) fs::create_directories(cfg.vocab_path.parent_path());
  vocab.save(cfg.vocab_path);
  out << fmt::format("vocabulary: {} entries from {} documents -> {}\n", vocab.size(), corpus.documents.size(),
                     cfg.vocab_path.string());
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& out) {
  cfg.train.validate();
  require_file(cfg.train_corpus, "training corpus");
  require_file(cfg.vocab_path, "vocabulary");
  auto vocab = Vocabulary::load(cfg.vocab_path);
  auto corpus = load_corpus(cfg.train_corpus);
  auto encoded = encode_corpus(corpus.documents, vocab, cfg.train);
  if (encoded.empty()) throw ConfigError("training corpus has no usable documents");
  Model model(model_config_for(cfg.train, vocab), cfg.train.seed);
  Trainer trainer(model, cfg.train);
  fs::create_directories(cfg.checkpoint_dir);
  if (cfg.metrics_log.has_parent_path()) fs::create_directories(cfg.metrics_log.parent_path());
  std::ofstream metrics(cfg.metrics_log, std::ios::trunc);
  if (!metrics) throw std::runtime_error("cannot write metrics log " + cfg.metrics_log.string());
  TrainOptions opts;
  opts.metrics = &metrics;
  opts.checkpoint_dir = cfg.checkpoint_dir;
  auto records = trainer.train(encoded, opts);
  out << fmt::format("trained {} steps over {} documents; final loss {:.6f}; checkpoints in {}\n", records.size(),
                     encoded.size(), records.empty() ? 0.0 : records.back().loss, cfg.checkpoint_dir.string());
  return 0;
}

std::vector<std::string> split_tokens(const std::string& s) {
  std::vector<std::string> toks;
  std::istringstream is(s);
  std::string t;
  while (is >> t) toks.push_back(t);
  return toks;
}

int cmd_decode(const RunConfig& cfg, const Overrides& ov, std::ostream& out) {
  require_file(cfg.eval_corpus, "evaluation corpus");
  require_file(cfg.vocab_path, "vocabulary");
  auto loaded = load_model(cfg, ov);
  auto vocab = Vocabulary::load(cfg.vocab_path);
  if (vocab.size() != loaded.model->config().vocab_size)
    throw ConfigError(fmt::format("vocabulary has {} entries but the checkpoint expects {}", vocab.size(),
                                  loaded.model->config().vocab_size));
  auto corpus = load_corpus(cfg.eval_corpus);
  TrainConfig tc = cfg.train;
  tc.flat_encoder = loaded.model->config().flat;
  auto encoded = encode_corpus(corpus.documents, vocab, tc);

  std::vector<std::string> summaries(encoded.size());
  const auto n = static_cast<std::int64_t>(encoded.size());
  Model& model = *loaded.model;
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& in = encoded[static_cast<std::size_t>(i)];
    auto toks = summarize(model, in, vocab, cfg.train.beam, cfg.train.max_decode, cfg.greedy);
    std::string joined;
    for (const auto& t : toks) joined += (joined.empty() ? "" : " ") + t;
    summaries[static_cast<std::size_t>(i)] = std::move(joined);
  }
  if (cfg.decode_output.has_parent_path()) fs::create_directories(cfg.decode_output.parent_path());
  std::ofstream os(cfg.decode_output, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + cfg.decode_output.string());
  for (std::size_t i = 0; i < encoded.size(); ++i)
    os << nlohmann::json{{"article_id", encoded[i].id}, {"summary", summaries[i]}}.dump() << '\n';
  out << fmt::format("decoded {} documents with {} -> {}\n", encoded.size(), loaded.path.filename().string(),
                     cfg.decode_output.string());
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, const Overrides& ov, std::ostream& out) {
  if (ov.checkpoint) cmd_decode(cfg, ov, out);
  require_file(cfg.eval_corpus, "evaluation corpus");
  require_file(cfg.decode_output, "decoded summaries");
  std::map<std::string, std::vector<std::string>> decoded;
  {
    std::ifstream is(cfg.decode_output);
    std::string line;
    while (std::getline(is, line)) {
      if (trim(line).empty()) continue;
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("article_id") || !j.contains("summary"))
        throw std::runtime_error("malformed line in " + cfg.decode_output.string());
      decoded[j["article_id"].get<std::string>()] = split_tokens(j["summary"].get<std::string>());
    }
  }
  auto corpus = load_corpus(cfg.eval_corpus);
  std::vector<std::vector<std::string>> cands, refs;
  for (const auto& d : corpus.documents) {
    auto it = decoded.find(d.id);
    if (it == decoded.end()) throw std::runtime_error("no decoded summary for article " + d.id);
    cands.push_back(it->second);
    refs.push_back(d.abstract);
  }
  auto report = rouge::format_report(rouge::score_corpus(cands, refs));
  if (cfg.report_path.has_parent_path()) fs::create_directories(cfg.report_path.parent_path());
  std::ofstream(cfg.report_path) << report;
  out << report;
  return 0;
}

}  // namespace

RunConfig parse_config(std::istream& in, const fs::path& base_dir) {
  RunConfig c;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(fmt::format("config line {}: expected key=value", line_no));
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(fmt::format("config line {}: unknown key '{}'", line_no, key));
    try {
      it->second(c, value, base_dir);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {} ({}): {}", line_no, key, e.what()));
    }
  }
  fill_defaults(c, base_dir);
  return c;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config file not found: " + path.string());
  return parse_config(is, fs::absolute(path).parent_path());
}

int split_of(const std::string& article_id, std::uint64_t seed, double val_fraction, double test_fraction) {
  const double u = unit_uniform(mix64(fnv1a(std::to_string(seed) + ":" + article_id)));
  if (u < val_fraction) return 1;
  if (u < val_fraction + test_fraction) return 2;
  return 0;
}

std::string usage() {
  return "usage: strata <preprocess|build-vocab|train|decode|evaluate> --config PATH [--seed INT] [--checkpoint PATH]\n";
}

void configure_logging() {
  const char* env = std::getenv("STRATA_LOG");
  const std::string level = env ? env : "info";
  if (level == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

int run(const std::string& command, RunConfig config, const Overrides& overrides, std::ostream& out,
        std::ostream& err) {
  static const char* kCommands[] = {"preprocess", "build-vocab", "train", "decode", "evaluate"};
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands)) {
    err << "unknown command '" << command << "'\n" << usage();
    return 2;
  }
  if (overrides.seed) config.train.seed = *overrides.seed;
  try {
    if (command == "preprocess") return cmd_preprocess(config, out);
    if (command == "build-vocab") return cmd_build_vocab(config, out);
    if (command == "train") return cmd_train(config, out);
    if (command == "decode") return cmd_decode(config, overrides, out);
    return cmd_evaluate(config, overrides, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace strata::cli
