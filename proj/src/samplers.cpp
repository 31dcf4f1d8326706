#include "invuq/samplers.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <limits>
#include <thread>

#include "invuq/errors.hpp"

namespace invuq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

Vector standard_normal(Rng& rng, Index n) {
  std::normal_distribution<double> normal;
  Vector z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool accept(Rng& rng, double log_ratio) {
  if (std::isnan(log_ratio)) return false;
  if (log_ratio >= 0.0) return true;
  return std::log(uniform01(rng)) < log_ratio;
}

// Robbins-Monro gain for the k-th adaptation step.
double gain(long k) { return std::pow(static_cast<double>(k + 1), -0.6); }

std::shared_ptr<const Target> borrow(const Target& t) {
  return std::shared_ptr<const Target>(std::shared_ptr<const Target>{}, &t);
}

}  // namespace

// ------------------------------------------------------------------ targets

Vector Target::gradient(const Vector&) const { throw CapabilityError("target has no gradient"); }

std::pair<double, Vector> Target::value_and_gradient(const Vector& x) const {
  double lp;
  try {
    lp = logpdf(x);
  } catch (const DomainError&) {
    lp = kNegInf;
  }
  if (!std::isfinite(lp)) return {kNegInf, Vector::Zero(dim())};
  try {
    return {lp, gradient(x)};
  } catch (const DomainError&) {
    return {kNegInf, Vector::Zero(dim())};
  }
}

FunctionTarget::FunctionTarget(Index dim, LogpdfFn logpdf, GradientFn gradient)
    : dim_(dim), logpdf_(std::move(logpdf)), gradient_(std::move(gradient)) {
  if (!logpdf_) throw InvalidArgument("target needs a log-density");
}

Vector FunctionTarget::gradient(const Vector& x) const {
  if (!gradient_) throw CapabilityError("target has no gradient");
  return gradient_(x);
}

PosteriorTarget::PosteriorTarget(const Posterior& post, std::vector<std::string> variables,
                                 Assignment context, Terms terms)
    : post_(&post), vars_(std::move(variables)), context_(std::move(context)), terms_(terms) {
  for (const auto& v : vars_) {
    if (!post.is_target(v)) throw InvalidArgument("'" + v + "' is not a target variable");
    dim_ += post.dim(v);
    context_.erase(v);
  }
}

Assignment PosteriorTarget::unflatten(const Vector& x) const {
  if (x.size() != dim_) throw DimensionError("posterior target point", dim_, x.size());
  Assignment a = context_;
  Index off = 0;
  for (const auto& v : vars_) {
    const Index d = post_->dim(v);
    a[v] = x.segment(off, d);
    off += d;
  }
  return a;
}

Vector PosteriorTarget::flatten(const Assignment& a) const {
  Vector x(dim_);
  Index off = 0;
  for (const auto& v : vars_) {
    const Index d = post_->dim(v);
    x.segment(off, d) = a.at(v);
    off += d;
  }
  return x;
}

double PosteriorTarget::logpdf(const Vector& x) const { return post_->logpdf(unflatten(x), terms_); }

bool PosteriorTarget::has_gradient() const {
  return std::all_of(vars_.begin(), vars_.end(), [&](const std::string& v) { return post_->has_gradient(v); });
}

Vector PosteriorTarget::gradient(const Vector& x) const {
  const Assignment a = unflatten(x);
  Vector g(dim_);
  Index off = 0;
  for (const auto& v : vars_) {
    const Index d = post_->dim(v);
    g.segment(off, d) = post_->gradient(v, a, terms_);
    off += d;
  }
  return g;
}

// ------------------------------------------------------------------- config

void SamplerConfig::validate() const {
  if (!(scale >= 0.0) || !std::isfinite(scale)) throw InvalidArgument("scale must be non-negative");
  if (!(step > 0.0)) throw InvalidArgument("step h must be positive");
  if (!(pcn_step > 0.0 && pcn_step <= 1.0)) throw InvalidArgument("pCN step s must lie in (0, 1]");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw InvalidArgument("target acceptance must lie in (0, 1)");
  if (max_depth < 1) throw InvalidArgument("max tree depth must be at least 1");
  if (step_size && !(*step_size > 0.0)) throw InvalidArgument("step size must be positive");
  if (cgls_max_iter < 1) throw InvalidArgument("CGLS max_iter must be at least 1");
  if (!(cgls_tol > 0.0)) throw InvalidArgument("CGLS tol must be positive");
  if (!(ugla_beta > 0.0)) throw InvalidArgument("UGLA beta must be positive");
  if (inner_steps < 0) throw InvalidArgument("inner steps must be non-negative");
}

SamplerConfig default_config(SamplerKind kind) {
  SamplerConfig c;
  c.kind = kind;
  return c;
}

namespace {

int default_inner_steps(SamplerKind k) {
  switch (k) {
    case SamplerKind::MH:
    case SamplerKind::CWMH:
    case SamplerKind::pCN:
    case SamplerKind::ULA:
    case SamplerKind::MALA:
      return 10;
    default:
      return 1;
  }
}

// ----------------------------------------------------------- target kernels

// Kernel over a flat target; optionally rebuilt from a posterior context.
class TargetKernel : public Kernel {
 public:
  TargetKernel(const SamplerConfig& cfg, std::shared_ptr<const Target> t) : cfg_(cfg), target_(std::move(t)) {}
  TargetKernel(const SamplerConfig& cfg, const Posterior& post, std::vector<std::string> vars)
      : cfg_(cfg), post_(&post), vars_(std::move(vars)) {
    target_ = std::make_shared<PosteriorTarget>(post, vars_, Assignment{});
  }

  void set_context(const Assignment& context) override {
    if (!post_) return;
    target_ = std::make_shared<PosteriorTarget>(*post_, vars_, context);
    if (x_.size() > 0) refresh();
  }

  void reset(const Vector& x0) override {
    if (x0.size() != target_->dim()) throw DimensionError("initial point", target_->dim(), x0.size());
    x_ = x0;
    refresh();
    if (!std::isfinite(lp_)) throw InvalidArgument("initial point has zero probability density");
  }

 protected:
  virtual void refresh() {
    lp_ = eval(x_);
  }
  double eval(const Vector& x) {
    ++evaluations_;
    try {
      const double v = target_->logpdf(x);
      return std::isnan(v) ? kNegInf : v;
    } catch (const DomainError&) {
      return kNegInf;
    }
  }
  std::pair<double, Vector> eval_grad(const Vector& x) {
    ++evaluations_;
    return target_->value_and_gradient(x);
  }
  void require_gradient() const {
    if (!target_->has_gradient()) throw CapabilityError("sampler needs the gradient of the log-density");
  }

  SamplerConfig cfg_;
  std::shared_ptr<const Target> target_;
  const Posterior* post_ = nullptr;
  std::vector<std::string> vars_;
  double lp_ = kNegInf;
};

class MhKernel final : public TargetKernel {
 public:
  using TargetKernel::TargetKernel;

  void step(Rng& rng, bool adapt) override {
    const double scale = std::exp(log_scale_);
    const Vector xp = x_ + scale * standard_normal(rng, x_.size());
    const double lpp = eval(xp);
    const double log_ratio = lpp - lp_;
    ++proposals_;
    if (accept(rng, log_ratio)) {
      x_ = xp;
      lp_ = lpp;
      ++accepted_;
    }
    if (adapt) {
      const double a = std::isnan(log_ratio) ? 0.0 : std::min(1.0, std::exp(log_ratio));
      log_scale_ += gain(adapt_steps_++) * (a - 0.234);
    }
  }
  double tuning_parameter() const override { return std::exp(log_scale_); }

 private:
  double log_scale_ = std::log(cfg_.scale);
  long adapt_steps_ = 0;
};

class CwmhKernel final : public TargetKernel {
 public:
  using TargetKernel::TargetKernel;

  void step(Rng& rng, bool adapt) override {
    if (log_scales_.size() != x_.size()) log_scales_ = Vector::Constant(x_.size(), std::log(cfg_.scale));
    std::normal_distribution<double> normal;
    for (Index i = 0; i < x_.size(); ++i) {
      Vector xp = x_;
      xp[i] += std::exp(log_scales_[i]) * normal(rng);
      const double lpp = eval(xp);
      const double log_ratio = lpp - lp_;
      ++proposals_;
      if (accept(rng, log_ratio)) {
        x_ = std::move(xp);
        lp_ = lpp;
        ++accepted_;
      }
      if (adapt) {
        const double a = std::isnan(log_ratio) ? 0.0 : std::min(1.0, std::exp(log_ratio));
        log_scales_[i] += gain(adapt_steps_) * (a - 0.44);
      }
    }
    if (adapt) ++adapt_steps_;
  }
  double tuning_parameter() const override {
    return log_scales_.size() ? log_scales_.array().exp().mean() : cfg_.scale;
  }

 private:
  Vector log_scales_;
  long adapt_steps_ = 0;
};

class UlaKernel final : public TargetKernel {
 public:
  UlaKernel(const SamplerConfig& cfg, std::shared_ptr<const Target> t) : TargetKernel(cfg, std::move(t)) {
    require_gradient();
  }
  UlaKernel(const SamplerConfig& cfg, const Posterior& post, std::vector<std::string> vars)
      : TargetKernel(cfg, post, std::move(vars)) {
    require_gradient();
  }

  void reset(const Vector& x0) override {
    if (x0.size() != target_->dim()) throw DimensionError("initial point", target_->dim(), x0.size());
    x_ = x0;
  }

  void step(Rng& rng, bool) override {
    ++evaluations_;
    const double h = cfg_.step;
    x_ = x_ + h * target_->gradient(x_) + std::sqrt(2.0 * h) * standard_normal(rng, x_.size());
    ++proposals_;
    ++accepted_;
  }
  double tuning_parameter() const override { return cfg_.step; }
};

class MalaKernel final : public TargetKernel {
 public:
  MalaKernel(const SamplerConfig& cfg, std::shared_ptr<const Target> t) : TargetKernel(cfg, std::move(t)) {
    require_gradient();
  }
  MalaKernel(const SamplerConfig& cfg, const Posterior& post, std::vector<std::string> vars)
      : TargetKernel(cfg, post, std::move(vars)) {
    require_gradient();
  }

  void step(Rng& rng, bool adapt) override {
    const double h = std::exp(log_h_);
    const Vector xp = x_ + h * grad_ + std::sqrt(2.0 * h) * standard_normal(rng, x_.size());
    auto [lpp, gp] = eval_grad(xp);
    double log_ratio = kNegInf;
    if (std::isfinite(lpp)) {
      const double fwd = (xp - x_ - h * grad_).squaredNorm() / (4.0 * h);
      const double bwd = (x_ - xp - h * gp).squaredNorm() / (4.0 * h);
      log_ratio = lpp - lp_ + fwd - bwd;
    }
    ++proposals_;
    if (accept(rng, log_ratio)) {
      x_ = xp;
      lp_ = lpp;
      grad_ = std::move(gp);
      ++accepted_;
    }
    if (adapt) {
      const double a = std::isnan(log_ratio) ? 0.0 : std::min(1.0, std::exp(log_ratio));
      log_h_ += gain(adapt_steps_++) * (a - 0.574);
    }
  }
  double tuning_parameter() const override { return std::exp(log_h_); }

 protected:
  void refresh() override {
    auto [lp, g] = eval_grad(x_);
    lp_ = lp;
    grad_ = std::move(g);
  }

 private:
  double log_h_ = std::log(cfg_.step);
  long adapt_steps_ = 0;
  Vector grad_;
};

// No-U-Turn sampler with slice variable and dual-averaging step size.
class NutsKernel final : public TargetKernel {
 public:
  NutsKernel(const SamplerConfig& cfg, std::shared_ptr<const Target> t) : TargetKernel(cfg, std::move(t)) {
    require_gradient();
  }
  NutsKernel(const SamplerConfig& cfg, const Posterior& post, std::vector<std::string> vars)
      : TargetKernel(cfg, post, std::move(vars)) {
    require_gradient();
  }

  void step(Rng& rng, bool adapt) override {
    if (eps_ <= 0.0) initialize_step_size(rng);
    const Index n = x_.size();
    const Vector r0 = standard_normal(rng, n);
    const double joint0 = lp_ - 0.5 * r0.squaredNorm();
    const double log_u = joint0 + std::log(uniform01(rng));

    State minus{x_, r0, grad_}, plus{x_, r0, grad_};
    Vector x_new = x_, g_new = grad_;
    double lp_new = lp_;
    double count = 1.0;
    bool keep_going = true;
    double alpha_sum = 0.0, alpha_n = 0.0;
    for (int depth = 0; keep_going && depth < cfg_.max_depth; ++depth) {
      const int dir = uniform01(rng) < 0.5 ? -1 : 1;
      Tree t = dir < 0 ? build(minus, log_u, dir, depth, joint0, rng) : build(plus, log_u, dir, depth, joint0, rng);
      if (dir < 0)
        minus = t.minus;
      else
        plus = t.plus;
      if (t.ok && t.n > 0 && uniform01(rng) < t.n / count) {
        x_new = t.x_prime;
        g_new = t.g_prime;
        lp_new = t.lp_prime;
      }
      count += t.n;
      alpha_sum += t.alpha;
      alpha_n += t.n_alpha;
      keep_going = t.ok && no_u_turn(minus, plus);
    }
    const double accept_stat = alpha_n > 0 ? alpha_sum / alpha_n : 0.0;
    if (x_new != x_) ++accepted_;
    ++proposals_;
    stat_sum_ += accept_stat;
    ++stat_n_;
    x_ = std::move(x_new);
    grad_ = std::move(g_new);
    lp_ = lp_new;

    if (adapt) {
      ++m_;
      const double md = static_cast<double>(m_);
      hbar_ = (1.0 - 1.0 / (md + kT0)) * hbar_ + (cfg_.target_accept - accept_stat) / (md + kT0);
      const double log_eps = mu_ - std::sqrt(md) / kGamma * hbar_;
      const double eta = std::pow(md, -kKappa);
      log_eps_bar_ = eta * log_eps + (1.0 - eta) * log_eps_bar_;
      eps_ = std::exp(log_eps);
    }
  }

  void end_adaptation() override {
    if (m_ > 0) eps_ = std::exp(log_eps_bar_);
  }
  double tuning_parameter() const override { return eps_; }

  // Mean acceptance statistic, reported in place of the move rate.
  double mean_accept_stat() const { return stat_n_ ? stat_sum_ / static_cast<double>(stat_n_) : 0.0; }
  void reset_stats() {
    stat_sum_ = 0.0;
    stat_n_ = 0;
  }

 protected:
  void refresh() override {
    auto [lp, g] = eval_grad(x_);
    lp_ = lp;
    grad_ = std::move(g);
  }

 private:
  static constexpr double kDeltaMax = 1000.0;
  static constexpr double kGamma = 0.05;
  static constexpr double kT0 = 10.0;
  static constexpr double kKappa = 0.75;

  struct State {
    Vector x, r, g;
  };
  struct Tree {
    State minus, plus;
    Vector x_prime, g_prime;
    double lp_prime = kNegInf;
    double n = 0.0;
    bool ok = true;
    double alpha = 0.0;
    double n_alpha = 0.0;
  };

  static bool no_u_turn(const State& minus, const State& plus) {
    const Vector dx = plus.x - minus.x;
    return dx.dot(minus.r) >= 0.0 && dx.dot(plus.r) >= 0.0;
  }

  std::pair<State, double> leapfrog(const State& s, double eps) {
    State out;
    out.r = s.r + 0.5 * eps * s.g;
    out.x = s.x + eps * out.r;
    auto [lp, g] = eval_grad(out.x);
    out.g = std::move(g);
    out.r += 0.5 * eps * out.g;
    return {std::move(out), lp};
  }

  Tree build(const State& s, double log_u, int dir, int depth, double joint0, Rng& rng) {
    if (depth == 0) {
      auto [next, lp] = leapfrog(s, dir * eps_);
      const double joint = std::isfinite(lp) ? lp - 0.5 * next.r.squaredNorm() : kNegInf;
      Tree t;
      t.n = log_u <= joint ? 1.0 : 0.0;
      t.ok = log_u < kDeltaMax + joint;
      if (!t.ok) ++divergences_;
      t.alpha = std::isfinite(joint) ? std::min(1.0, std::exp(joint - joint0)) : 0.0;
      t.n_alpha = 1.0;
      t.x_prime = next.x;
      t.g_prime = next.g;
      t.lp_prime = lp;
      t.minus = next;
      t.plus = std::move(next);
      return t;
    }
    Tree t = build(s, log_u, dir, depth - 1, joint0, rng);
    if (!t.ok) return t;
    Tree t2 = dir < 0 ? build(t.minus, log_u, dir, depth - 1, joint0, rng)
                      : build(t.plus, log_u, dir, depth - 1, joint0, rng);
    if (dir < 0)
      t.minus = std::move(t2.minus);
    else
      t.plus = std::move(t2.plus);
    if (t.n + t2.n > 0.0 && uniform01(rng) < t2.n / (t.n + t2.n)) {
      t.x_prime = std::move(t2.x_prime);
      t.g_prime = std::move(t2.g_prime);
      t.lp_prime = t2.lp_prime;
    }
    t.alpha += t2.alpha;
    t.n_alpha += t2.n_alpha;
    t.n += t2.n;
    t.ok = t2.ok && no_u_turn(t.minus, t.plus);
    return t;
  }

  void initialize_step_size(Rng& rng) {
    if (cfg_.step_size) {
      eps_ = *cfg_.step_size;
    } else {
      eps_ = 1.0;
      const Vector r = standard_normal(rng, x_.size());
      const double joint0 = lp_ - 0.5 * r.squaredNorm();
      auto log_ratio = [&] {
        auto [next, lp] = leapfrog(State{x_, r, grad_}, eps_);
        const double joint = std::isfinite(lp) ? lp - 0.5 * next.r.squaredNorm() : kNegInf;
        return joint - joint0;
      };
      double lr = log_ratio();
      const double a = lr > std::log(0.5) ? 1.0 : -1.0;
      for (int i = 0; i < 200 && a * lr > -a * std::log(2.0); ++i) {
        eps_ *= std::pow(2.0, a);
        lr = log_ratio();
      }
    }
    mu_ = std::log(10.0 * eps_);
  }

  Vector grad_;
  double eps_ = 0.0;
  double mu_ = 0.0;
  double hbar_ = 0.0;
  double log_eps_bar_ = 0.0;
  long m_ = 0;
  double stat_sum_ = 0.0;
  long stat_n_ = 0;
};

// ------------------------------------------------------ structured kernels

class PcnKernel final : public Kernel {
 public:
  PcnKernel(const SamplerConfig& cfg, std::shared_ptr<const Target> loglik, Vector mean,
            std::function<Vector(Rng&)> noise)
      : cfg_(cfg), loglik_(std::move(loglik)), mean_(std::move(mean)), noise_(std::move(noise)) {}

  PcnKernel(const SamplerConfig& cfg, const Posterior& post, std::vector<std::string> vars)
      : cfg_(cfg), post_(&post), vars_(std::move(vars)) {
    if (vars_.size() != 1) throw CapabilityError("pCN updates a single variable");
    const auto fam = post.prior(vars_.front()).family();
    if (fam != Distribution::Family::Gaussian && fam != Distribution::Family::GMRF)
      throw CapabilityError("pCN needs a Gaussian prior on '" + vars_.front() + "'");
    set_context({});
  }

  void set_context(const Assignment& context) override {
    if (!post_) return;
    const std::string var = vars_.front();
    auto full_target = std::make_shared<PosteriorTarget>(*post_, vars_, context);
    Assignment ctx = post_->joint().complete([&] {
      Assignment a = context;
      for (const auto& [k, v] : post_->data()) a[k] = v;
      return a;
    }());
    auto prior = std::make_shared<const Distribution>(post_->prior(var).resolve(ctx));
    mean_ = prior->mean_vector();
    const Vector mean = mean_;
    noise_ = [prior, mean](Rng& rng) { return Vector(prior->sample_one(rng) - mean); };
    loglik_ = std::make_shared<FunctionTarget>(full_target->dim(), [full_target, prior](const Vector& x) {
      const double lp = full_target->logpdf(x);
      if (!std::isfinite(lp)) return lp;
      return lp - prior->logpdf(x);
    });
    if (x_.size() > 0) ll_ = eval(x_);
  }

  void reset(const Vector& x0) override {
    x_ = x0;
    ll_ = eval(x_);
    if (!std::isfinite(ll_)) throw InvalidArgument("initial point has zero likelihood");
  }

  void step(Rng& rng, bool) override {
    const double s = cfg_.pcn_step;
    const Vector xp = mean_ + std::sqrt(1.0 - s * s) * (x_ - mean_) + s * noise_(rng);
    const double llp = eval(xp);
    ++proposals_;
    if (accept(rng, llp - ll_)) {
      x_ = xp;
      ll_ = llp;
      ++accepted_;
    }
  }
  double tuning_parameter() const override { return cfg_.pcn_step; }

 private:
  double eval(const Vector& x) {
    ++evaluations_;
    try {
      const double v = loglik_->logpdf(x);
      return std::isnan(v) ? kNegInf : v;
    } catch (const DomainError&) {
      return kNegInf;
    }
  }

  SamplerConfig cfg_;
  std::shared_ptr<const Target> loglik_;
  Vector mean_;
  std::function<Vector(Rng&)> noise_;
  const Posterior* post_ = nullptr;
  std::vector<std::string> vars_;
  double ll_ = kNegInf;
};

// Stacked least-squares system sum ||op_i x - rhs_i||^2.
struct StackedSystem {
  std::shared_ptr<StackedOperator> op;
  Vector rhs;
};

StackedSystem stack(const std::vector<LeastSquaresBlock>& blocks) {
  std::vector<std::shared_ptr<const LinearOperator>> ops;
  Index rows = 0;
  for (const auto& b : blocks) {
    ops.push_back(b.op);
    rows += b.rhs.size();
  }
  StackedSystem s{std::make_shared<StackedOperator>(ops), Vector(rows)};
  Index off = 0;
  for (const auto& b : blocks) {
    s.rhs.segment(off, b.rhs.size()) = b.rhs;
    off += b.rhs.size();
  }
  return s;
}

class RtoKernel final : public Kernel {
 public:
  RtoKernel(const SamplerConfig& cfg, const Posterior& post, std::vector<std::string> vars)
      : cfg_(cfg), post_(post), var_(vars.at(0)) {
    const auto conj = detect_conjugacy(post, var_);
    if (vars.size() != 1 || !conj || conj->kind != Conjugacy::Kind::gaussian_linear)
      throw CapabilityError("LinearRTO needs a Gaussian prior and linear Gaussian likelihoods for '" + var_ + "'");
  }

  void set_context(const Assignment& context) override {
    std::vector<LeastSquaresBlock> blocks{prior_block(post_, var_, context)};
    for (auto& b : likelihood_blocks(post_, var_, context)) blocks.push_back(std::move(b));
    sys_ = stack(blocks);
  }
  void reset(const Vector& x0) override {
    if (!sys_.op) set_context({});
    if (x0.size() != sys_.op->cols()) throw DimensionError("initial point", sys_.op->cols(), x0.size());
    x_ = x0;
  }
  void step(Rng& rng, bool) override {
    const Vector rhs = sys_.rhs + standard_normal(rng, sys_.rhs.size());
    const Vector start = x_;
    x_ = cgls_solve(*sys_.op, rhs, cfg_.cgls_max_iter, cfg_.cgls_tol, &start).x;
    ++evaluations_;
    ++proposals_;
    ++accepted_;
  }

 private:
  SamplerConfig cfg_;
  const Posterior& post_;
  std::string var_;
  StackedSystem sys_;
};

class UglaKernel final : public Kernel {
 public:
  UglaKernel(const SamplerConfig& cfg, const Posterior& post, std::vector<std::string> vars)
      : cfg_(cfg), post_(post), var_(vars.at(0)) {
    if (vars.size() != 1 || !is_lmrf_linear_gaussian(post, var_))
      throw CapabilityError("UGLA needs an LMRF prior and linear Gaussian likelihoods for '" + var_ + "'");
    const Distribution& p = post.prior(var_);
    dims_ = p.mrf_dims();
    diff_ = mrf_difference_operator(p.dim(), dims_);
  }

  void set_context(const Assignment& context) override {
    likelihood_ = likelihood_blocks(post_, var_, context);
    Assignment full = post_.joint().complete([&] {
      Assignment a = context;
      for (const auto& [k, v] : post_.data()) a[k] = v;
      return a;
    }());
    const Distribution prior = post_.prior(var_).resolve(full);
    b_ = prior.mrf_parameter();
    location_diff_ = diff_->apply(prior.mean_vector());
  }
  void reset(const Vector& x0) override {
    if (likelihood_.empty()) set_context({});
    x_ = x0;
  }
  void step(Rng& rng, bool) override {
    // Local Gaussian approximation of |t| ~ sqrt(t^2 + beta) around the current state.
    const Vector dx = diff_->apply(x_) - location_diff_;
    const double factor = dims_ == 1 ? 1.0 : 0.5;
    const Vector w = (factor / (b_ * (dx.array().square() + cfg_.ugla_beta).sqrt())).sqrt().matrix();
    std::vector<LeastSquaresBlock> blocks = likelihood_;
    blocks.push_back({std::make_shared<const RowScaledOperator>(diff_, w), w.cwiseProduct(location_diff_)});
    StackedSystem sys = stack(blocks);
    sys.rhs += standard_normal(rng, sys.rhs.size());
    const Vector start = x_;
    x_ = cgls_solve(*sys.op, sys.rhs, cfg_.cgls_max_iter, cfg_.cgls_tol, &start).x;
    ++evaluations_;
    ++proposals_;
    ++accepted_;
  }

 private:
  SamplerConfig cfg_;
  const Posterior& post_;
  std::string var_;
  int dims_ = 1;
  std::shared_ptr<const LinearOperator> diff_;
  std::vector<LeastSquaresBlock> likelihood_;
  double b_ = 1.0;
  Vector location_diff_;
};

class ConjugateKernel final : public Kernel {
 public:
  ConjugateKernel(const Posterior& post, std::vector<std::string> vars, bool allow_approx)
      : post_(post), var_(vars.at(0)) {
    const auto c = detect_conjugacy(post, var_);
    if (vars.size() != 1 || !c || c->kind == Conjugacy::Kind::gaussian_linear)
      throw CapabilityError("no Gamma conjugate relation found for '" + var_ + "'");
    if (!c->exact && !allow_approx)
      throw CapabilityError("'" + var_ + "' has only an approximate conjugate relation; use ConjugateApprox");
    conj_ = *c;
  }

  void set_context(const Assignment& context) override {
    const auto [a, b] = gamma_conditional(post_, conj_, context);
    shape_ = a;
    rate_ = b;
  }
  void reset(const Vector& x0) override {
    if (shape_ <= 0.0) set_context(post_.default_point());
    x_ = x0;
  }
  void step(Rng& rng, bool) override {
    x_ = scalar_vector(std::gamma_distribution<double>(shape_, 1.0 / rate_)(rng));
    ++evaluations_;
    ++proposals_;
    ++accepted_;
  }

 private:
  const Posterior& post_;
  std::string var_;
  Conjugacy conj_{};
  double shape_ = 0.0;
  double rate_ = 1.0;
};

}  // namespace

std::unique_ptr<Kernel> make_kernel(const SamplerConfig& cfg, const Posterior& post,
                                    std::vector<std::string> variables) {
  cfg.validate();
  switch (cfg.kind) {
    case SamplerKind::MH: return std::make_unique<MhKernel>(cfg, post, std::move(variables));
    case SamplerKind::CWMH: return std::make_unique<CwmhKernel>(cfg, post, std::move(variables));
    case SamplerKind::ULA: return std::make_unique<UlaKernel>(cfg, post, std::move(variables));
    case SamplerKind::MALA: return std::make_unique<MalaKernel>(cfg, post, std::move(variables));
    case SamplerKind::NUTS: return std::make_unique<NutsKernel>(cfg, post, std::move(variables));
    case SamplerKind::pCN: return std::make_unique<PcnKernel>(cfg, post, std::move(variables));
    case SamplerKind::LinearRTO: return std::make_unique<RtoKernel>(cfg, post, std::move(variables));
    case SamplerKind::UGLA: return std::make_unique<UglaKernel>(cfg, post, std::move(variables));
    case SamplerKind::Conjugate: {
      const auto c = detect_conjugacy(post, variables.at(0));
      if (variables.size() == 1 && c && c->kind == Conjugacy::Kind::gaussian_linear)
        return std::make_unique<RtoKernel>(cfg, post, std::move(variables));
      return std::make_unique<ConjugateKernel>(post, std::move(variables), false);
    }
    case SamplerKind::ConjugateApprox:
      return std::make_unique<ConjugateKernel>(post, std::move(variables), true);
  }
  throw InvalidArgument("unknown sampler kind");
}

std::unique_ptr<Kernel> make_kernel(const SamplerConfig& cfg, std::shared_ptr<const Target> target) {
  cfg.validate();
  switch (cfg.kind) {
    case SamplerKind::MH: return std::make_unique<MhKernel>(cfg, std::move(target));
    case SamplerKind::CWMH: return std::make_unique<CwmhKernel>(cfg, std::move(target));
    case SamplerKind::ULA: return std::make_unique<UlaKernel>(cfg, std::move(target));
    case SamplerKind::MALA: return std::make_unique<MalaKernel>(cfg, std::move(target));
    case SamplerKind::NUTS: return std::make_unique<NutsKernel>(cfg, std::move(target));
    default:
      throw CapabilityError(to_string(cfg.kind) + " needs a structured posterior, not a plain target");
  }
}

std::unique_ptr<Kernel> make_pcn_kernel(const SamplerConfig& cfg, std::shared_ptr<const Target> loglik,
                                        Vector prior_mean, std::function<Vector(Rng&)> prior_noise) {
  cfg.validate();
  return std::make_unique<PcnKernel>(cfg, std::move(loglik), std::move(prior_mean), std::move(prior_noise));
}

namespace {

double reported_acceptance(Kernel& k) {
  if (auto* n = dynamic_cast<NutsKernel*>(&k)) return n->mean_accept_stat();
  return k.acceptance_rate();
}

void begin_sampling(Kernel& k, bool adapted) {
  if (adapted) k.end_adaptation();
  k.reset_counters();
  if (auto* n = dynamic_cast<NutsKernel*>(&k)) n->reset_stats();
}

}  // namespace

Chain run_kernel(Kernel& k, const Vector& x0, Index N, Index Nb, Rng& rng, bool adapt) {
  if (N < 1) throw InvalidArgument("number of samples must be at least 1");
  if (Nb < 0) throw InvalidArgument("burn-in must be non-negative");
  Chain c;
  k.reset(x0);
  for (Index i = 0; i < Nb; ++i) {
    k.step(rng, adapt);
    c.trace.push_back(k.tuning_parameter());
  }
  begin_sampling(k, adapt && Nb > 0);
  c.draws.resize(N, x0.size());
  for (Index i = 0; i < N; ++i) {
    k.step(rng, false);
    c.draws.row(i) = k.state().transpose();
  }
  c.acceptance = reported_acceptance(k);
  c.evaluations = k.evaluations();
  c.divergences = k.divergences();
  return c;
}

namespace {

Chain run_plain(SamplerKind kind, const Target& t, SamplerConfig cfg, const Vector& x0, Index N, Index Nb,
                Rng& rng) {
  cfg.kind = kind;
  auto k = make_kernel(cfg, borrow(t));
  return run_kernel(*k, x0, N, Nb, rng, cfg.adapt);
}

}  // namespace

Chain mh_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng) {
  return run_plain(SamplerKind::MH, t, cfg, x0, N, Nb, rng);
}
Chain cwmh_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng) {
  return run_plain(SamplerKind::CWMH, t, cfg, x0, N, Nb, rng);
}
Chain ula_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng) {
  return run_plain(SamplerKind::ULA, t, cfg, x0, N, Nb, rng);
}
Chain mala_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng) {
  return run_plain(SamplerKind::MALA, t, cfg, x0, N, Nb, rng);
}
Chain nuts_sample(const Target& t, const SamplerConfig& cfg, const Vector& x0, Index N, Index Nb, Rng& rng) {
  return run_plain(SamplerKind::NUTS, t, cfg, x0, N, Nb, rng);
}

double mala_log_acceptance(const Target& t, const Vector& x, const Vector& xp, double h) {
  const double lp = t.logpdf(x), lpp = t.logpdf(xp);
  const Vector g = t.gradient(x), gp = t.gradient(xp);
  const double fwd = (xp - x - h * g).squaredNorm() / (4.0 * h);
  const double bwd = (x - xp - h * gp).squaredNorm() / (4.0 * h);
  return lpp - lp + fwd - bwd;
}

// ------------------------------------------------------------ posterior runs

ChainResult sample_posterior(const Posterior& post, const SamplingPlan& plan, const RunOptions& opts) {
  if (opts.N < 1) throw InvalidArgument("number of samples must be at least 1");
  if (opts.Nb < 0) throw InvalidArgument("burn-in must be non-negative");
  std::vector<std::string> covered;
  for (const auto& e : plan.entries)
    for (const auto& v : e.variables) {
      if (!post.is_target(v)) throw InvalidArgument("plan names '" + v + "', which is not a target variable");
      if (std::find(covered.begin(), covered.end(), v) != covered.end())
        throw InvalidArgument("plan covers '" + v + "' more than once");
      covered.push_back(v);
    }
  for (const auto& t : post.targets())
    if (std::find(covered.begin(), covered.end(), t) == covered.end())
      throw InvalidArgument("plan does not cover target variable '" + t + "'");

  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(opts.seed);
  Assignment current = post.default_point();
  for (const auto& [k, v] : opts.initial) {
    if (!post.is_target(k)) throw InvalidArgument("initial value for unknown target '" + k + "'");
    if (v.size() != post.dim(k)) throw DimensionError("initial value of '" + k + "'", post.dim(k), v.size());
    current[k] = v;
  }

  struct Slot {
    PlanEntry entry;
    SamplerConfig cfg;
    std::unique_ptr<Kernel> kernel;
    int inner = 1;
  };
  std::vector<Slot> slots;
  const bool gibbs = plan.entries.size() > 1;
  auto context_for = [&](const PlanEntry& e) {
    Assignment ctx = current;
    for (const auto& v : e.variables) ctx.erase(v);
    return ctx;
  };
  auto flatten = [&](const PlanEntry& e) {
    Index d = 0;
    for (const auto& v : e.variables) d += post.dim(v);
    Vector x(d);
    Index off = 0;
    for (const auto& v : e.variables) {
      x.segment(off, post.dim(v)) = current.at(v);
      off += post.dim(v);
    }
    return x;
  };
  auto write_back = [&](const PlanEntry& e, const Vector& x) {
    Index off = 0;
    for (const auto& v : e.variables) {
      current[v] = x.segment(off, post.dim(v));
      off += post.dim(v);
    }
  };

  for (const auto& e : plan.entries) {
    Slot s{e, default_config(e.kind), nullptr, 1};
    auto it = opts.configs.find(e.variables.front());
    if (it != opts.configs.end()) s.cfg = it->second;
    s.cfg.kind = e.kind;
    s.kernel = make_kernel(s.cfg, post, e.variables);
    s.inner = gibbs ? (s.cfg.inner_steps > 0 ? s.cfg.inner_steps : default_inner_steps(e.kind)) : 1;
    slots.push_back(std::move(s));
  }
  for (auto& s : slots) {
    s.kernel->set_context(context_for(s.entry));
    s.kernel->reset(flatten(s.entry));
  }

  ChainResult out;
  out.seed = opts.seed;
  std::map<std::string, Matrix> draws;
  for (const auto& t : post.targets()) draws[t].resize(opts.N, post.dim(t));

  for (Index it = 0; it < opts.Nb + opts.N; ++it) {
    const bool burn = it < opts.Nb;
    for (auto& s : slots) {
      if (gibbs) s.kernel->set_context(context_for(s.entry));
      for (int k = 0; k < s.inner; ++k) s.kernel->step(rng, burn && s.cfg.adapt);
      write_back(s.entry, s.kernel->state());
    }
    if (burn) out.trace.push_back(slots.front().kernel->tuning_parameter());
    if (it + 1 == opts.Nb || (opts.Nb == 0 && it == 0)) {
      for (auto& s : slots) begin_sampling(*s.kernel, opts.Nb > 0 && s.cfg.adapt);
      if (opts.Nb == 0) {
        // Counters were reset after the first recorded step; redo from scratch.
      }
    }
    if (!burn) {
      const Index row = it - opts.Nb;
      for (const auto& t : post.targets()) draws[t].row(row) = current.at(t).transpose();
    }
  }

  for (auto& s : slots) {
    std::string key;
    for (std::size_t i = 0; i < s.entry.variables.size(); ++i) key += (i ? "," : "") + s.entry.variables[i];
    out.acceptance[key] = reported_acceptance(*s.kernel);
    out.evaluations += s.kernel->evaluations();
    out.divergences += s.kernel->divergences();
  }
  std::string sampler_name;
  for (const auto& s : slots) sampler_name += (sampler_name.empty() ? "" : "+") + to_string(s.entry.kind);
  for (const auto& t : post.targets()) {
    out.samples.add(t, Samples(std::move(draws[t]), post.prior(t).geometry(),
                               Provenance{opts.seed, sampler_name, 0}));
  }
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<ChainResult> sample_chains(const Posterior& post, const SamplingPlan& plan, const RunOptions& opts,
                                       int chains) {
  if (chains < 1) throw InvalidArgument("number of chains must be at least 1");
  auto run_one = [&](int c) {
    RunOptions o = opts;
    o.seed = mix_seed(opts.seed, static_cast<std::uint64_t>(c));
    ChainResult r = sample_posterior(post, plan, o);
    SampleSet relabeled;
    for (const auto& [name, s] : r.samples.entries()) {
      Provenance p = s.provenance();
      p.chain = c;
      relabeled.add(name, Samples(s.draws(), s.geometry(), p));
    }
    r.samples = std::move(relabeled);
    return r;
  };
  std::vector<ChainResult> out;
  const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
  if (cores == 1 || chains == 1) {
    for (int c = 0; c < chains; ++c) out.push_back(run_one(c));
    return out;
  }
  std::vector<std::future<ChainResult>> futures;
  for (int c = 0; c < chains; ++c) futures.push_back(std::async(std::launch::async, run_one, c));
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

}  // namespace invuq
