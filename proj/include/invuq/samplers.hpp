#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invuq/inference.hpp"
#include "invuq/samples.hpp"
#include "invuq/types.hpp"

namespace invuq {

/// Log-density over a flat parameter vector.
class Target {
 public:
  virtual ~Target() = default;
  virtual Index dim() const = 0;
  virtual double logpdf(const Vector& x) const = 0;
  virtual bool has_gradient() const { return false; }
  virtual Vector gradient(const Vector& x) const;
  /// Gradient is zero wherever the density vanishes.
  virtual std::pair<double, Vector> value_and_gradient(const Vector& x) const;
};

class FunctionTarget final : public Target {
 public:
  using LogpdfFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  FunctionTarget(Index dim, LogpdfFn logpdf, GradientFn gradient = nullptr);

  Index dim() const override { return dim_; }
  double logpdf(const Vector& x) const override { return logpdf_(x); }
  bool has_gradient() const override { return static_cast<bool>(gradient_); }
  Vector gradient(const Vector& x) const override;

 private:
  Index dim_;
  LogpdfFn logpdf_;
  GradientFn gradient_;
};

/// Posterior restricted to `variables` (concatenated in order) with the other
/// targets fixed at `context`.
class PosteriorTarget final : public Target {
 public:
  PosteriorTarget(const Posterior& post, std::vector<std::string> variables, Assignment context,
                  Terms terms = Terms::all);

  Index dim() const override { return dim_; }
  double logpdf(const Vector& x) const override;
  bool has_gradient() const override;
  Vector gradient(const Vector& x) const override;

  Assignment unflatten(const Vector& x) const;
  Vector flatten(const Assignment& a) const;

 private:
  const Posterior* post_;
  std::vector<std::string> vars_;
  Assignment context_;
  Terms terms_;
  Index dim_ = 0;
};

struct SamplerConfig {
  SamplerKind kind = SamplerKind::MH;
  /// Proposal scale for MH and CWMH (initial value when adapting).
  double scale = 1.0;
  /// Step h for ULA and MALA.
  double step = 0.1;
  /// pCN step s in (0, 1].
  double pcn_step = 0.2;
  double target_accept = 0.8;
  int max_depth = 10;
  /// Initial NUTS step size; found heuristically when unset.
  std::optional<double> step_size;
  int cgls_max_iter = 1000;
  double cgls_tol = 1e-6;
  double ugla_beta = 1e-4;
  bool adapt = true;
  /// Inner steps per Gibbs sweep; 0 selects the default for the kind.
  int inner_steps = 0;

  void validate() const;
};

SamplerConfig default_config(SamplerKind kind);

/// One Markov chain transition kernel with persistent state.
class Kernel {
 public:
  virtual ~Kernel() = default;

  /// Values of the variables this kernel does not update (posterior kernels).
  virtual void set_context(const Assignment& context) { (void)context; }
  virtual void reset(const Vector& x0) = 0;
  virtual void step(Rng& rng, bool adapt) = 0;
  /// Called once when burn-in ends.
  virtual void end_adaptation() {}
  /// Current value of the tuned parameter (scale, step size), if any.
  virtual double tuning_parameter() const { return 0.0; }

  const Vector& state() const { return x_; }
  double acceptance_rate() const {
    return proposals_ > 0 ? static_cast<double>(accepted_) / static_cast<double>(proposals_) : 1.0;
  }
  void reset_counters() {
    accepted_ = 0;
    proposals_ = 0;
    divergences_ = 0;
  }
  long evaluations() const { return evaluations_; }
  long divergences() const { return divergences_; }

 protected:
  Vector x_;
  long accepted_ = 0;
  long proposals_ = 0;
  long evaluations_ = 0;
  long divergences_ = 0;
};

/// Creates a kernel over `variables` of `post`.
std::unique_ptr<Kernel> make_kernel(const SamplerConfig& cfg, const Posterior& post,
                                    std::vector<std::string> variables);
/// Creates a kernel over a plain target (MH, CWMH, ULA, MALA, NUTS).
std::unique_ptr<Kernel> make_kernel(const SamplerConfig& cfg, std::shared_ptr<const Target> target);
/// pCN over log-likelihood `loglik` with a Gaussian prior given by its mean and
/// a zero-mean prior draw.
std::unique_ptr<Kernel> make_pcn_kernel(const SamplerConfig& cfg, std::shared_ptr<const Target> loglik,
                                        Vector prior_mean, std::function<Vector(Rng&)> prior_noise);

struct Chain {
  Matrix draws;  // N x dim
  double acceptance = 1.0;
  std::vector<double> trace;  // tuned parameter during burn-in
  long evaluations = 0;
  long divergences = 0;
};

/// Runs Nb burn-in steps (adapting if cfg allows) then N recorded steps.
Chain run_kernel(Kernel& k, const Vector& x0, Index N, Index Nb, Rng& rng, bool adapt = true);

Chain mh_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng);
Chain cwmh_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng);
Chain ula_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng);
Chain mala_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng);
Chain nuts_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng);

/// log of the MALA acceptance ratio for moving from x to xp.
double mala_log_acceptance(const Target& t, const Vector& x, const Vector& xp, double h);

struct ChainResult {
  SampleSet samples;
  std::map<std::string, double> acceptance;  // per plan entry
  std::vector<double> trace;
  std::uint64_t seed = 0;
  double wall_time = 0.0;
  long evaluations = 0;
  long divergences = 0;
};

struct RunOptions {
  Index N = 1000;
  Index Nb = 0;
  std::uint64_t seed = 0;
  /// Starting values; missing targets start from the prior.
  Assignment initial;
  /// Per plan-entry configuration keyed by the first variable of the entry.
  std::map<std::string, SamplerConfig> configs;
};

/// Single-sampler or Gibbs run of `plan` on `post`.
ChainResult sample_posterior(const Posterior& post, const SamplingPlan& plan, const RunOptions& opts);

/// Independent chains with seeds mix_seed(seed, chain).
std::vector<ChainResult> sample_chains(const Posterior& post, const SamplingPlan& plan,
                                       const RunOptions& opts, int chains);

}  // namespace invuq
