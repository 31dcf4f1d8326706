#include "invuq/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "invuq/errors.hpp"

namespace invuq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// A then B: x -> B(A x).
class ComposedOperator final : public LinearOperator {
 public:
  ComposedOperator(std::shared_ptr<const LinearOperator> first, std::shared_ptr<const LinearOperator> second)
      : first_(std::move(first)), second_(std::move(second)) {}
  Index rows() const override { return second_->rows(); }
  Index cols() const override { return first_->cols(); }
  Vector apply(const Vector& x) const override { return second_->apply(first_->apply(x)); }
  Vector apply_transpose(const Vector& y) const override {
    return first_->apply_transpose(second_->apply_transpose(y));
  }

 private:
  std::shared_ptr<const LinearOperator> first_;
  std::shared_ptr<const LinearOperator> second_;
};

Assignment merged(const Assignment& base, const Assignment& over) {
  Assignment out = base;
  for (const auto& [k, v] : over) out.insert_or_assign(k, v);
  return out;
}

}  // namespace

// ------------------------------------------------------- JointDistribution

JointDistribution::JointDistribution(std::vector<Distribution> components,
                                     std::vector<DeterministicNode> nodes)
    : components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("joint distribution needs at least one component");
  std::set<std::string> names;
  for (const auto& c : components_)
    if (!names.insert(c.name()).second) throw InvalidArgument("duplicate variable '" + c.name() + "'");
  for (const auto& n : nodes)
    if (!names.insert(n.name).second) throw InvalidArgument("duplicate variable '" + n.name + "'");
  for (const auto& c : components_)
    for (const auto& v : c.conditioning_variables())
      if (!names.count(v))
        throw InvalidArgument("'" + c.name() + "' depends on unknown variable '" + v + "'");

  // Order deterministic nodes so each follows its dependencies.
  std::set<std::string> ready;
  for (const auto& c : components_) ready.insert(c.name());
  while (!nodes.empty()) {
    auto it = std::find_if(nodes.begin(), nodes.end(), [&](const DeterministicNode& n) {
      return std::all_of(n.dependencies.begin(), n.dependencies.end(),
                         [&](const std::string& d) { return ready.count(d) > 0; });
    });
    if (it == nodes.end()) throw InvalidArgument("deterministic nodes have cyclic or unknown dependencies");
    ready.insert(it->name);
    nodes_.push_back(std::move(*it));
    nodes.erase(it);
  }

  // Component graph must be acyclic.
  std::map<std::string, std::set<std::string>> deps;
  for (const auto& n : nodes_) deps[n.name] = {n.dependencies.begin(), n.dependencies.end()};
  for (const auto& c : components_) {
    const auto v = c.conditioning_variables();
    deps[c.name()] = {v.begin(), v.end()};
  }
  std::map<std::string, int> state;
  std::function<void(const std::string&)> visit = [&](const std::string& v) {
    if (state[v] == 2) return;
    if (state[v] == 1) throw InvalidArgument("cyclic dependency involving '" + v + "'");
    state[v] = 1;
    for (const auto& d : deps[v]) visit(d);
    state[v] = 2;
  };
  for (const auto& [v, _] : deps) visit(v);
}

bool JointDistribution::has_component(const std::string& name) const {
  return std::any_of(components_.begin(), components_.end(),
                     [&](const Distribution& d) { return d.name() == name; });
}

const Distribution& JointDistribution::component(const std::string& name) const {
  for (const auto& c : components_)
    if (c.name() == name) return c;
  throw InvalidArgument("no component named '" + name + "'");
}

const DeterministicNode* JointDistribution::node(const std::string& name) const {
  for (const auto& n : nodes_)
    if (n.name == name) return &n;
  return nullptr;
}

std::vector<std::string> JointDistribution::variable_names() const {
  std::vector<std::string> out;
  for (const auto& c : components_) out.push_back(c.name());
  return out;
}

Assignment JointDistribution::complete(const Assignment& a) const {
  Assignment out = a;
  for (const auto& n : nodes_) {
    const bool available = std::all_of(n.dependencies.begin(), n.dependencies.end(),
                                       [&](const std::string& d) { return out.count(d) > 0; });
    if (available) out.insert_or_assign(n.name, n.value(out));
  }
  return out;
}

double JointDistribution::logpdf(const Assignment& a) const {
  for (const auto& c : components_)
    if (!a.count(c.name())) throw InvalidArgument("missing value for variable '" + c.name() + "'");
  const Assignment full = complete(a);
  double s = 0.0;
  for (const auto& c : components_) s += c.resolve(full).logpdf(full.at(c.name()));
  return s;
}

std::string JointDistribution::factorization() const {
  std::string lhs = "p(";
  std::string rhs;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    lhs += (i ? "," : "") + components_[i].name();
    rhs += "p(" + components_[i].name();
    const auto v = components_[i].conditioning_variables();
    for (std::size_t j = 0; j < v.size(); ++j) rhs += (j ? "," : "|") + v[j];
    rhs += ")";
  }
  return lhs + ") = " + rhs;
}

Posterior JointDistribution::condition(const Assignment& data) const { return Posterior(*this, data); }

// --------------------------------------------------------------- Posterior

Posterior::Posterior(JointDistribution joint, Assignment data)
    : joint_(std::move(joint)), data_(std::move(data)) {
  for (const auto& [k, v] : data_) {
    if (!joint_.has_component(k)) throw InvalidArgument("cannot condition on unknown variable '" + k + "'");
    const Index d = joint_.component(k).dim();
    if (v.size() != d) throw DimensionError("observed value of '" + k + "'", d, v.size());
  }
  for (const auto& c : joint_.components())
    if (!data_.count(c.name())) targets_.push_back(c.name());
  if (targets_.empty()) throw InvalidArgument("every variable is observed; nothing to infer");
}

bool Posterior::is_target(const std::string& name) const {
  return std::find(targets_.begin(), targets_.end(), name) != targets_.end();
}

Index Posterior::dim(const std::string& var) const { return joint_.component(var).dim(); }

double Posterior::logpdf(const Assignment& targets, Terms terms) const {
  for (const auto& t : targets_)
    if (!targets.count(t)) throw InvalidArgument("missing value for variable '" + t + "'");
  try {
    const Assignment full = joint_.complete(merged(targets, data_));
    double s = 0.0;
    for (const auto& c : joint_.components()) {
      const bool observed = data_.count(c.name()) > 0;
      if (terms == Terms::likelihood && !observed) continue;
      if (terms == Terms::prior && observed) continue;
      s += c.resolve(full).logpdf(full.at(c.name()));
      if (s == kNegInf) return kNegInf;
    }
    return std::isnan(s) ? kNegInf : s;
  } catch (const DomainError&) {
    return kNegInf;
  }
}

bool Posterior::depends_on(const Param& p, const std::string& var) const {
  std::function<bool(const std::string&)> reaches = [&](const std::string& d) {
    if (d == var) return true;
    if (const auto* n = joint_.node(d))
      return std::any_of(n->dependencies.begin(), n->dependencies.end(), reaches);
    return false;
  };
  const auto deps = p.dependencies();
  return std::any_of(deps.begin(), deps.end(), reaches);
}

std::vector<std::string> Posterior::dependents(const std::string& var) const {
  std::vector<std::string> out;
  for (const auto& c : joint_.components()) {
    if (c.name() == var) continue;
    for (const auto& role : {"mean", "scale", "shape", "rate", "m", "variance", "low", "high", "location", "precision"}) {
      if (c.has_param(role) && depends_on(c.param(role), var)) {
        out.push_back(c.name());
        break;
      }
    }
  }
  return out;
}

void Posterior::accumulate(const std::string& dep, const Vector& g, const std::string& var,
                           const Assignment& full, Vector& out) const {
  if (dep == var) {
    if (g.size() == out.size())
      out += g;
    else if (out.size() == 1)
      out[0] += g.sum();
    else
      throw DimensionError("gradient contribution for '" + var + "'", out.size(), g.size());
    return;
  }
  const DeterministicNode* n = joint_.node(dep);
  if (!n) return;
  if (!n->vjp) throw CapabilityError("deterministic node '" + dep + "' has no derivative");
  for (const auto& [d2, g2] : n->vjp(full, g)) accumulate(d2, g2, var, full, out);
}

Vector Posterior::gradient(const std::string& var, const Assignment& targets, Terms terms) const {
  if (!is_target(var)) throw InvalidArgument("'" + var + "' is not a target variable");
  const Assignment full = joint_.complete(merged(targets, data_));
  Vector out = Vector::Zero(dim(var));
  for (const auto& c : joint_.components()) {
    const bool observed = data_.count(c.name()) > 0;
    if (terms == Terms::likelihood && !observed) continue;
    if (terms == Terms::prior && observed) continue;
    const bool own = c.name() == var;
    std::vector<std::string> roles;
    for (const auto& role : {"mean", "scale", "shape", "rate", "m", "variance", "low", "high", "location", "precision"})
      if (c.has_param(role) && depends_on(c.param(role), var)) roles.emplace_back(role);
    if (!own && roles.empty()) continue;
    const Distribution r = c.resolve(full);
    const Vector& x = full.at(c.name());
    if (own) out += r.gradient(x);
    for (const auto& role : roles) {
      if (role != "mean" && role != "location")
        throw CapabilityError("gradient with respect to '" + var + "' through the " + role + " of '" +
                              c.name() + "' is not supported");
      Vector g = r.location_gradient(x);
      const Param& p = c.param(role);
      if (p.evaluate(full).size() == 1 && g.size() != 1) g = scalar_vector(g.sum());
      for (const auto& [dep, gd] : p.vjp(full, g)) accumulate(dep, gd, var, full, out);
    }
  }
  return out;
}

bool Posterior::has_gradient(const std::string& var) const {
  if (!prior(var).has_gradient()) return false;
  for (const auto& name : dependents(var)) {
    const Distribution& c = joint_.component(name);
    for (const auto& role : {"scale", "shape", "rate", "m", "variance", "low", "high", "precision"})
      if (c.has_param(role) && depends_on(c.param(role), var)) return false;
    const char* loc = c.has_param("mean") ? "mean" : "location";
    if (!c.has_param(loc)) return false;
    if (c.family() != Distribution::Family::Gaussian && c.family() != Distribution::Family::GMRF &&
        c.family() != Distribution::Family::CMRF)
      return false;
    if (!c.param(loc).has_vjp()) return false;
  }
  for (const auto& n : joint_.nodes())
    if (!n.vjp && std::any_of(n.dependencies.begin(), n.dependencies.end(), [&](const std::string& d) {
          return d == var;
        }))
      return false;
  return true;
}

Assignment Posterior::default_point() const {
  Assignment a = data_;
  std::vector<std::string> pending = targets_;
  while (!pending.empty()) {
    bool progress = false;
    for (auto it = pending.begin(); it != pending.end();) {
      const Distribution& c = joint_.component(*it);
      const Assignment full = joint_.complete(a);
      const auto vars = c.conditioning_variables();
      if (std::all_of(vars.begin(), vars.end(), [&](const std::string& v) { return full.count(v) > 0; })) {
        a[*it] = c.resolve(full).default_point();
        it = pending.erase(it);
        progress = true;
      } else {
        ++it;
      }
    }
    if (!progress) throw InvalidArgument("cannot build a starting point: unresolved dependencies");
  }
  Assignment out;
  for (const auto& t : targets_) out[t] = a.at(t);
  return out;
}

// --------------------------------------------------------------- Conjugacy

namespace {

bool linear_gaussian_dependent(const Posterior& post, const Distribution& c, const std::string& var) {
  if (c.family() != Distribution::Family::Gaussian) return false;
  const Param& mean = c.param("mean");
  if (mean.dependencies() != std::vector<std::string>{var}) return false;
  if (mean.kind() == Param::Kind::model) {
    if (!mean.forward_model()->is_linear()) return false;
  } else if (mean.kind() != Param::Kind::variable) {
    return false;
  }
  if (mean.kind() == Param::Kind::variable && c.dim() != post.dim(var)) return false;
  if (c.has_param("scale")) {
    const auto deps = c.param("scale").dependencies();
    if (std::find(deps.begin(), deps.end(), var) != deps.end()) return false;
  }
  return true;
}

bool all_dependents_linear_gaussian(const Posterior& post, const std::string& var) {
  for (const auto& name : post.dependents(var))
    if (!linear_gaussian_dependent(post, post.joint().component(name), var)) return false;
  return true;
}

}  // namespace

bool is_lmrf_linear_gaussian(const Posterior& post, const std::string& var) {
  if (!post.is_target(var)) return false;
  const Distribution& p = post.prior(var);
  if (p.family() != Distribution::Family::LMRF) return false;
  if (!p.param("location").is_constant()) return false;
  return !post.dependents(var).empty() && all_dependents_linear_gaussian(post, var);
}

std::optional<Conjugacy> detect_conjugacy(const Posterior& post, const std::string& var) {
  if (!post.is_target(var)) throw InvalidArgument("'" + var + "' is not a target variable");
  const Distribution& p = post.prior(var);
  using F = Distribution::Family;

  if (p.family() == F::Gaussian || p.family() == F::GMRF) {
    const char* loc = p.family() == F::Gaussian ? "mean" : "location";
    const auto loc_deps = p.param(loc).dependencies();
    if (std::find(loc_deps.begin(), loc_deps.end(), var) != loc_deps.end()) return std::nullopt;
    if (!all_dependents_linear_gaussian(post, var)) return std::nullopt;
    return Conjugacy{Conjugacy::Kind::gaussian_linear, true, var, ""};
  }

  if (p.family() != F::Gamma || p.dim() != 1) return std::nullopt;
  if (!p.param("shape").is_constant() || !p.param("rate").is_constant()) return std::nullopt;
  const auto deps = post.dependents(var);
  if (deps.size() != 1) return std::nullopt;
  const Distribution& c = post.joint().component(deps.front());
  auto direct = [&](const char* role, Param::Kind kind) {
    if (!c.has_param(role)) return false;
    const Param& q = c.param(role);
    return q.kind() == kind && q.variable_name() == var;
  };
  auto clean = [&](const char* role) {
    if (!c.has_param(role)) return true;
    const auto d = c.param(role).dependencies();
    return std::find(d.begin(), d.end(), var) == d.end();
  };
  if (c.family() == F::Gaussian && !c.has_dense_covariance() && clean("mean") &&
      ((c.cov_tag() == CovTag::prec && direct("scale", Param::Kind::variable)) ||
       (c.cov_tag() == CovTag::cov && direct("scale", Param::Kind::reciprocal))))
    return Conjugacy{Conjugacy::Kind::gamma_gaussian_precision, true, var, c.name()};
  if (c.family() == F::GMRF && clean("location") && direct("precision", Param::Kind::variable))
    return Conjugacy{Conjugacy::Kind::gamma_gmrf_precision, true, var, c.name()};
  if (c.family() == F::LMRF && clean("location") && direct("scale", Param::Kind::reciprocal))
    return Conjugacy{Conjugacy::Kind::gamma_lmrf_inverse_scale, false, var, c.name()};
  return std::nullopt;
}

std::pair<double, double> gamma_conditional(const Posterior& post, const Conjugacy& c,
                                            const Assignment& context) {
  if (c.kind == Conjugacy::Kind::gaussian_linear)
    throw InvalidArgument("gamma_conditional called for a Gaussian conjugacy");
  const Distribution& prior = post.prior(c.variable);
  const double alpha = prior.param("shape").value()[0];
  const double beta = prior.param("rate").value()[0];
  const Assignment full = post.joint().complete(merged(context, post.data()));
  const Distribution& dep = post.joint().component(c.dependent);
  const Vector& x = full.at(c.dependent);
  auto centered = [&](const char* role) {
    Vector loc = dep.param(role).evaluate(full);
    if (loc.size() == 1 && x.size() != 1) loc = Vector::Constant(x.size(), loc[0]);
    return Vector(x - loc);
  };
  const auto n = static_cast<double>(dep.dim());
  switch (c.kind) {
    case Conjugacy::Kind::gamma_gaussian_precision:
      return {alpha + 0.5 * n, beta + 0.5 * centered("mean").squaredNorm()};
    case Conjugacy::Kind::gamma_gmrf_precision:
      return {alpha + 0.5 * n,
              beta + 0.5 * mrf_differences(centered("location"), dep.mrf_dims()).squaredNorm()};
    case Conjugacy::Kind::gamma_lmrf_inverse_scale:
      return {alpha + static_cast<double>(mrf_difference_count(dep.dim(), dep.mrf_dims())),
              beta + lmrf_functional(centered("location"), dep.mrf_dims())};
    default:
      break;
  }
  throw InvalidArgument("unsupported conjugacy");
}

std::vector<LeastSquaresBlock> likelihood_blocks(const Posterior& post, const std::string& var,
                                                 const Assignment& context) {
  const Assignment full = post.joint().complete(merged(context, post.data()));
  std::vector<LeastSquaresBlock> out;
  for (const auto& name : post.dependents(var)) {
    const Distribution& c = post.joint().component(name);
    if (!linear_gaussian_dependent(post, c, var))
      throw CapabilityError("'" + name + "' is not a linear Gaussian function of '" + var + "'");
    const Param& mean = c.param("mean");
    std::shared_ptr<const LinearOperator> A;
    if (mean.kind() == Param::Kind::model)
      A = mean.forward_model()->op();
    else
      A = std::make_shared<const MatrixOperator>(MatrixOperator::identity(post.dim(var)));
    Assignment without_var = full;
    without_var.erase(var);
    const Distribution r = c.resolve(without_var);
    const Vector& y = full.at(name);
    LeastSquaresBlock b;
    if (r.has_dense_covariance()) {
      Assignment tmp = without_var;
      tmp[var] = Vector::Zero(post.dim(var));
      const auto C = c.resolve(merged(tmp, {})).sqrt_precision();
      b.op = std::make_shared<const ComposedOperator>(A, C);
      b.rhs = C->apply(y);
    } else {
      // variances() only needs the scale, which does not depend on var.
      Distribution scale_only = Distribution::gaussian(name, Param(Vector::Zero(c.dim())), r.param("scale"),
                                                       r.cov_tag(), c.geometry());
      const Vector w = scale_only.variances().cwiseSqrt().cwiseInverse();
      b.op = std::make_shared<const RowScaledOperator>(A, w);
      b.rhs = w.cwiseProduct(y);
    }
    out.push_back(std::move(b));
  }
  return out;
}

LeastSquaresBlock prior_block(const Posterior& post, const std::string& var, const Assignment& context) {
  const Assignment full = post.joint().complete(merged(context, post.data()));
  const Distribution r = post.prior(var).resolve(full);
  LeastSquaresBlock b;
  b.op = r.sqrt_precision();
  b.rhs = b.op->apply(r.mean_vector());
  return b;
}

// ------------------------------------------------------ sampler selection

std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::MH: return "MH";
    case SamplerKind::CWMH: return "CWMH";
    case SamplerKind::pCN: return "pCN";
    case SamplerKind::ULA: return "ULA";
    case SamplerKind::MALA: return "MALA";
    case SamplerKind::NUTS: return "NUTS";
    case SamplerKind::LinearRTO: return "LinearRTO";
    case SamplerKind::UGLA: return "UGLA";
    case SamplerKind::Conjugate: return "Conjugate";
    case SamplerKind::ConjugateApprox: return "ConjugateApprox";
  }
  return "?";
}

SamplerKind sampler_kind_from_string(const std::string& s) {
  for (auto k : {SamplerKind::MH, SamplerKind::CWMH, SamplerKind::pCN, SamplerKind::ULA, SamplerKind::MALA,
                 SamplerKind::NUTS, SamplerKind::LinearRTO, SamplerKind::UGLA, SamplerKind::Conjugate,
                 SamplerKind::ConjugateApprox})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown sampler '" + s +
                        "' (expected MH, CWMH, pCN, ULA, MALA, NUTS, LinearRTO, UGLA, Conjugate or ConjugateApprox)");
}

std::string SamplingPlan::describe() const {
  std::string s;
  for (const auto& e : entries) {
    std::string vars;
    for (std::size_t i = 0; i < e.variables.size(); ++i) vars += (i ? ", " : "") + e.variables[i];
    s += vars + ": " + to_string(e.kind) + "\n";
  }
  return s;
}

SamplingPlan select_sampler(const Posterior& post) {
  SamplingPlan plan;
  for (const auto& var : post.targets()) {
    SamplerKind k;
    const auto conj = detect_conjugacy(post, var);
    if (conj && conj->kind == Conjugacy::Kind::gaussian_linear)
      k = SamplerKind::LinearRTO;
    else if (is_lmrf_linear_gaussian(post, var))
      k = SamplerKind::UGLA;
    else if (conj)
      k = conj->exact ? SamplerKind::Conjugate : SamplerKind::ConjugateApprox;
    else if (post.has_gradient(var))
      k = SamplerKind::NUTS;
    else
      k = post.dim(var) <= 10 ? SamplerKind::MH : SamplerKind::CWMH;
    plan.entries.push_back({{var}, k});
  }
  // A sweep of NUTS steps on every block is replaced by one joint NUTS run.
  if (plan.entries.size() > 1 &&
      std::all_of(plan.entries.begin(), plan.entries.end(),
                  [](const PlanEntry& e) { return e.kind == SamplerKind::NUTS; })) {
    plan.entries = {{post.targets(), SamplerKind::NUTS}};
  }
  return plan;
}

// ----------------------------------------------------------- point estimates

namespace {

Vector solve_blocks(const std::vector<LeastSquaresBlock>& blocks, int max_iter, double tol) {
  std::vector<std::shared_ptr<const LinearOperator>> ops;
  Index rows = 0;
  for (const auto& b : blocks) {
    ops.push_back(b.op);
    rows += b.rhs.size();
  }
  StackedOperator M(ops);
  Vector rhs(rows);
  Index off = 0;
  for (const auto& b : blocks) {
    rhs.segment(off, b.rhs.size()) = b.rhs;
    off += b.rhs.size();
  }
  return cgls_solve(M, rhs, max_iter, tol).x;
}

Assignment gradient_ascent(const Posterior& post, Terms terms) {
  for (const auto& t : post.targets()) {
    if (post.prior(t).family() == Distribution::Family::LMRF)
      throw CapabilityError("point estimates under an LMRF prior need non-smooth optimization, which is not supported");
    if (!post.has_gradient(t)) throw CapabilityError("'" + t + "' has no gradient; cannot optimize");
  }
  Assignment a = post.default_point();
  auto value = [&](const Assignment& x) { return post.logpdf(x, terms); };
  auto grad = [&](const Assignment& x) {
    Assignment g;
    for (const auto& t : post.targets()) g[t] = post.gradient(t, x, terms);
    return g;
  };
  auto norm2 = [](const Assignment& g) {
    double s = 0.0;
    for (const auto& [k, v] : g) s += v.squaredNorm();
    return s;
  };
  double f = value(a);
  if (!std::isfinite(f)) throw DomainError("starting point has zero posterior density");
  double step = 1.0;
  constexpr double c = 1e-4;
  for (int it = 0; it < 10000; ++it) {
    const Assignment g = grad(a);
    const double gg = norm2(g);
    if (std::sqrt(gg) < 1e-6) break;
    bool accepted = false;
    step *= 2.0;
    for (int k = 0; k < 200; ++k) {
      Assignment trial = a;
      for (auto& [name, v] : trial) v += step * g.at(name);
      const double ft = value(trial);
      if (std::isfinite(ft) && ft >= f + c * step * gg) {
        a = std::move(trial);
        f = ft;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
  }
  return a;
}

}  // namespace

Assignment map_estimate(const Posterior& post) {
  if (post.targets().size() == 1) {
    const std::string& var = post.targets().front();
    const auto conj = detect_conjugacy(post, var);
    if (conj && conj->kind == Conjugacy::Kind::gaussian_linear) {
      std::vector<LeastSquaresBlock> blocks{prior_block(post, var, {})};
      for (auto& b : likelihood_blocks(post, var, {})) blocks.push_back(std::move(b));
      const int iters = static_cast<int>(std::max<Index>(1000, 4 * post.dim(var)));
      return {{var, solve_blocks(blocks, iters, 1e-10)}};
    }
  }
  return gradient_ascent(post, Terms::all);
}

Assignment ml_estimate(const Posterior& post) {
  if (post.targets().size() == 1) {
    const std::string& var = post.targets().front();
    if (!post.dependents(var).empty() && all_dependents_linear_gaussian(post, var))
      return {{var, solve_blocks(likelihood_blocks(post, var, {}), 200, 1e-10)}};
  }
  return gradient_ascent(post, Terms::likelihood);
}

}  // namespace invuq
