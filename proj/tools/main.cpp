#include <iostream>

#include "CLI11.hpp"
#include "invuq/cli.hpp"

int main(int argc, char** argv) {
  namespace cli = invuq::cli;
  CLI::App app{"Bayesian inverse problem sampling and diagnostics"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> chains;
  auto* run = app.add_subcommand("run", "Sample a configured problem and write summaries");
  run->add_option("config", config, "JSON run configuration")->required();
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out, "Output directory");
  run->add_option("--chains", chains, "Override the number of chains");

  std::string dir;
  auto* summarize = app.add_subcommand("summarize", "Tabulate exported chains");
  summarize->add_option("dir", dir, "Directory with raw chain exports")->required();

  std::string variable;
  auto* diag = app.add_subcommand("diag", "Trace, autocorrelation and ESS files for one variable");
  diag->add_option("dir", dir, "Directory with raw chain exports")->required();
  diag->add_option("variable", variable, "Variable name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? cli::kSuccess : cli::kInputError;
  }

  try {
    if (*run) {
      cli::Overrides o;
      o.seed = seed;
      if (out) o.out = *out;
      o.chains = chains;
      return cli::run(config, o, std::cout, std::cerr);
    }
    if (*summarize) return cli::summarize(dir, std::cout, std::cerr);
    return cli::diag(dir, variable, std::cout, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return cli::kRuntimeError;
  }
}
