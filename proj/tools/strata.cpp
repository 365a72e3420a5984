#include <iostream>

#include <CLI11.hpp>

#include "strata/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Discourse-aware summarization: preprocess, build-vocab, train, decode, evaluate"};
  std::string command;
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> checkpoint;
  app.add_option("command", command, "preprocess | build-vocab | train | decode | evaluate")->required();
  app.add_option("--config", config_path, "key=value configuration file")->required();
  app.add_option("--seed", seed, "overrides the configured seed");
  app.add_option("--checkpoint", checkpoint, "checkpoint for decode/evaluate (default: newest in checkpoint_dir)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << strata::cli::usage();
    return 2;
  }
  strata::cli::configure_logging();

  strata::cli::RunConfig config;
  try {
    config = strata::cli::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  strata::cli::Overrides overrides;
  overrides.seed = seed;
  if (checkpoint) overrides.checkpoint = *checkpoint;
  return strata::cli::run(command, std::move(config), overrides, std::cout, std::cerr);
}
