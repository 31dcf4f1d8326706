#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invuq/errors.hpp"
#include "invuq/samplers.hpp"
#include "invuq/testproblems.hpp"

namespace invuq::cli {

enum ExitCode : int { kSuccess = 0, kRuntimeError = 1, kInputError = 2, kCapabilityError = 3 };

/// Invalid configuration, anchored to a line of the source document.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

struct ProblemConfig {
  std::string builtin;  // deconvolution_1d, deconvolution_2d, gravity, eight_schools; empty for CSV models
  Index size = 0;       // n or N; 0 keeps the default
  std::string phantom;
  double psf_std = 3.0;
  std::optional<double> noise_std;
  std::optional<double> noise_precision;
  std::optional<std::uint64_t> data_seed;
  bool informative = false;
  Index gravity_points = 100;
  LinearProblemSpec prior;
  std::filesystem::path model_csv;
  std::filesystem::path data_csv;
};

struct PlanEntryConfig {
  std::vector<std::string> variables;
  SamplerConfig config;
};

struct RunConfig {
  std::string run_id;
  ProblemConfig problem;
  bool auto_sampler = true;
  std::vector<PlanEntryConfig> plan;
  Index N = 1000;
  Index Nb = 0;
  Index thin = 1;
  int chains = 1;
  std::uint64_t seed = 0;
  std::vector<std::string> statistics;
  std::optional<std::filesystem::path> directory;
  double ci_level = 95.0;
};

/// Parses and validates a config document; relative paths resolve against `base_dir`.
RunConfig parse_config(const std::string& text, const std::string& source,
                       const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

/// Builtin problem names accepted by configs.
const std::vector<std::string>& builtin_problems();

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<int> chains;
};

/// Output directory: --out, else the configured directory (relative to
/// $INVUQ_OUTPUT_ROOT when set), else $INVUQ_OUTPUT_ROOT/<run_id>.
std::filesystem::path output_directory(const RunConfig& cfg, const Overrides& o);

int run(const std::filesystem::path& config, const Overrides& o, std::ostream& out, std::ostream& err);
int summarize(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);
int diag(const std::filesystem::path& dir, const std::string& variable, std::ostream& out, std::ostream& err);

}  // namespace invuq::cli
