#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invuq/distributions.hpp"
#include "invuq/linalg.hpp"
#include "invuq/types.hpp"

namespace invuq {

/// Named pure function of other variables, e.g. x = u + t * x'.
struct DeterministicNode {
  std::string name;
  std::vector<std::string> dependencies;
  Param::Fn value;
  Param::Vjp vjp;  // optional
};

class Posterior;

/// Product of named components; components may defer parameters on each
/// other and on deterministic nodes.
class JointDistribution {
 public:
  explicit JointDistribution(std::vector<Distribution> components,
                             std::vector<DeterministicNode> nodes = {});

  const std::vector<Distribution>& components() const { return components_; }
  const std::vector<DeterministicNode>& nodes() const { return nodes_; }
  bool has_component(const std::string& name) const;
  const Distribution& component(const std::string& name) const;
  const DeterministicNode* node(const std::string& name) const;
  std::vector<std::string> variable_names() const;

  /// Adds deterministic node values to an assignment of the components.
  Assignment complete(const Assignment& a) const;
  double logpdf(const Assignment& a) const;
  /// Textual factorization, e.g. "p(y,x) = p(y|x)p(x)".
  std::string factorization() const;

  Posterior condition(const Assignment& data) const;

 private:
  std::vector<Distribution> components_;
  std::vector<DeterministicNode> nodes_;  // topologically sorted
};

/// Which components contribute to a log-density evaluation.
enum class Terms { all, likelihood, prior };

class Posterior {
 public:
  Posterior(JointDistribution joint, Assignment data);

  const JointDistribution& joint() const { return joint_; }
  const Assignment& data() const { return data_; }
  const std::vector<std::string>& targets() const { return targets_; }
  bool is_target(const std::string& name) const;
  Index dim(const std::string& var) const;
  const Distribution& prior(const std::string& var) const { return joint_.component(var); }

  /// Sum of component log-densities with data substituted; evaluation outside
  /// a model's domain gives -inf.
  double logpdf(const Assignment& targets, Terms terms = Terms::all) const;
  /// Gradient with respect to one target variable.
  Vector gradient(const std::string& var, const Assignment& targets, Terms terms = Terms::all) const;
  bool has_gradient(const std::string& var) const;
  /// Components (other than var itself) whose parameters depend on var,
  /// directly or through deterministic nodes.
  std::vector<std::string> dependents(const std::string& var) const;

  /// Starting point built from prior means/locations in dependency order.
  Assignment default_point() const;

 private:
  bool depends_on(const Param& p, const std::string& var) const;
  void accumulate(const std::string& dep, const Vector& g, const std::string& var,
                  const Assignment& full, Vector& out) const;

  JointDistribution joint_;
  Assignment data_;
  std::vector<std::string> targets_;
};

struct Conjugacy {
  enum class Kind {
    gaussian_linear,          // Gaussian prior, linear-Gaussian likelihoods
    gamma_gaussian_precision, // Gamma on the precision of a Gaussian
    gamma_gmrf_precision,     // Gamma on the precision of a GMRF
    gamma_lmrf_inverse_scale  // Gamma on d with LMRF scale 1/d (approximate)
  };
  Kind kind;
  bool exact = true;
  std::string variable;
  std::string dependent;  // component whose parameter is var (Gamma kinds)
};

std::optional<Conjugacy> detect_conjugacy(const Posterior& post, const std::string& var);

/// LMRF prior on var with only linear-Gaussian dependents.
bool is_lmrf_linear_gaussian(const Posterior& post, const std::string& var);

/// Gamma(shape, rate) conditional of a Gamma-type conjugacy at `context`.
std::pair<double, double> gamma_conditional(const Posterior& post, const Conjugacy& c,
                                            const Assignment& context);

/// -1/2 ||op x - rhs||^2 term of a Gaussian conditional.
struct LeastSquaresBlock {
  std::shared_ptr<const LinearOperator> op;
  Vector rhs;
};

/// Whitened likelihood blocks for var (dependents with linear Gaussian means).
std::vector<LeastSquaresBlock> likelihood_blocks(const Posterior& post, const std::string& var,
                                                 const Assignment& context);
/// Prior block C, C mu for a Gaussian or GMRF prior on var.
LeastSquaresBlock prior_block(const Posterior& post, const std::string& var,
                              const Assignment& context);

enum class SamplerKind { MH, CWMH, pCN, ULA, MALA, NUTS, LinearRTO, UGLA, Conjugate, ConjugateApprox };

std::string to_string(SamplerKind k);
SamplerKind sampler_kind_from_string(const std::string& s);

struct PlanEntry {
  std::vector<std::string> variables;
  SamplerKind kind;
};

struct SamplingPlan {
  std::vector<PlanEntry> entries;

  bool is_gibbs() const { return entries.size() > 1; }
  /// One "name: Sampler" line per entry.
  std::string describe() const;
};

SamplingPlan select_sampler(const Posterior& post);

Assignment map_estimate(const Posterior& post);
Assignment ml_estimate(const Posterior& post);

}  // namespace invuq
