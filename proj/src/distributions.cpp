#include "invuq/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <set>

#include "invuq/errors.hpp"

namespace invuq {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

std::string join_names(const std::vector<std::string>& names) {
  std::string s = "[";
  for (std::size_t i = 0; i < names.size(); ++i) s += (i ? ", '" : "'") + names[i] + "'";
  return s + "]";
}

const Vector& lookup(const Assignment& a, const std::string& name) {
  auto it = a.find(name);
  if (it == a.end()) throw InvalidArgument("missing value for variable '" + name + "'");
  return it->second;
}

// L^{-1} applied as an operator (C with C^T C = (L L^T)^{-1}).
class InverseFactorOperator final : public LinearOperator {
 public:
  explicit InverseFactorOperator(std::shared_ptr<const CholeskyFactor> f) : f_(std::move(f)) {}
  Index rows() const override { return f_->size(); }
  Index cols() const override { return f_->size(); }
  Vector apply(const Vector& x) const override { return f_->solve_lower(x); }
  Vector apply_transpose(const Vector& y) const override { return f_->solve_upper(y); }

 private:
  std::shared_ptr<const CholeskyFactor> f_;
};

double log_det_laplacian(Index n, int dims) {
  if (dims == 1) return std::log(static_cast<double>(n + 1));
  const Index N = *exact_square_root(n);
  std::vector<double> lam(static_cast<std::size_t>(N));
  for (Index j = 0; j < N; ++j)
    lam[static_cast<std::size_t>(j)] =
        2.0 - 2.0 * std::cos(static_cast<double>(j + 1) * std::numbers::pi / static_cast<double>(N + 1));
  double s = 0.0;
  for (double a : lam)
    for (double b : lam) s += std::log(a + b);
  return s;
}

}  // namespace

// Cholesky factor of the unit-precision GMRF matrix, built on first use.
struct GmrfFactorCache {
  Index n = 0;
  int dims = 1;
  std::once_flag once;
  std::shared_ptr<const CholeskyFactor> factor;

  const CholeskyFactor& get() {
    std::call_once(once, [this] {
      factor = std::make_shared<const CholeskyFactor>(cholesky_factor(gmrf_precision(n, 1.0, dims)));
    });
    return *factor;
  }
};

// ---------------------------------------------------------------- Param

Param::Param(Vector v) : kind_(Kind::constant), value_(std::move(v)) {}

Param Param::variable(std::string name) {
  Param p;
  p.kind_ = Kind::variable;
  p.var_ = std::move(name);
  return p;
}

Param Param::reciprocal(std::string name) {
  Param p;
  p.kind_ = Kind::reciprocal;
  p.var_ = std::move(name);
  return p;
}

Param Param::model(std::shared_ptr<const ForwardModel> m, std::string name) {
  if (!m) throw InvalidArgument("model parameter needs a model");
  Param p;
  p.kind_ = Kind::model;
  p.model_ = std::move(m);
  p.var_ = std::move(name);
  return p;
}

Param Param::function(std::vector<std::string> deps, Fn fn, Vjp vjp) {
  if (!fn) throw InvalidArgument("function parameter needs a callable");
  Param p;
  p.kind_ = Kind::function;
  p.deps_ = std::move(deps);
  p.fn_ = std::move(fn);
  p.vjp_ = std::move(vjp);
  return p;
}

bool Param::has_vjp() const {
  switch (kind_) {
    case Kind::constant:
    case Kind::variable:
    case Kind::reciprocal:
      return true;
    case Kind::model:
      return model_->has_jacobian();
    case Kind::function:
      return static_cast<bool>(vjp_);
  }
  return false;
}

std::vector<std::string> Param::dependencies() const {
  switch (kind_) {
    case Kind::constant:
      return {};
    case Kind::variable:
    case Kind::reciprocal:
    case Kind::model:
      return {var_};
    case Kind::function:
      return deps_;
  }
  return {};
}

Vector Param::evaluate(const Assignment& a) const {
  switch (kind_) {
    case Kind::constant:
      return value_;
    case Kind::variable:
      return lookup(a, var_);
    case Kind::reciprocal:
      return lookup(a, var_).cwiseInverse();
    case Kind::model:
      return model_->forward(lookup(a, var_));
    case Kind::function:
      for (const auto& d : deps_) lookup(a, d);
      return fn_(a);
  }
  return {};
}

Assignment Param::vjp(const Assignment& a, const Vector& upstream) const {
  switch (kind_) {
    case Kind::constant:
      return {};
    case Kind::variable:
      return {{var_, upstream}};
    case Kind::reciprocal: {
      const Vector& v = lookup(a, var_);
      return {{var_, -upstream.cwiseQuotient(v.cwiseProduct(v))}};
    }
    case Kind::model:
      return {{var_, model_->jacobian_transpose_apply(lookup(a, var_), upstream)}};
    case Kind::function:
      if (!vjp_) throw CapabilityError("deferred parameter has no derivative");
      return vjp_(a, upstream);
  }
  return {};
}

Param Param::bind(const Assignment& a) const {
  switch (kind_) {
    case Kind::constant:
      return *this;
    case Kind::variable:
    case Kind::reciprocal:
    case Kind::model:
      if (a.count(var_)) return Param(evaluate(a));
      return *this;
    case Kind::function: {
      Assignment bound;
      std::vector<std::string> rest;
      for (const auto& d : deps_) {
        auto it = a.find(d);
        if (it != a.end())
          bound.emplace(d, it->second);
        else
          rest.push_back(d);
      }
      if (rest.empty()) return Param(fn_(bound));
      if (bound.empty()) return *this;
      auto fn = fn_;
      auto vjp = vjp_;
      auto merge = [bound](const Assignment& x) {
        Assignment all = x;
        for (const auto& [k, v] : bound) all.insert_or_assign(k, v);
        return all;
      };
      Vjp partial_vjp;
      if (vjp) {
        partial_vjp = [vjp, merge, bound](const Assignment& x, const Vector& g) {
          Assignment out = vjp(merge(x), g);
          for (const auto& kv : bound) out.erase(kv.first);
          return out;
        };
      }
      return function(rest, [fn, merge](const Assignment& x) { return fn(merge(x)); }, partial_vjp);
    }
  }
  return *this;
}

// ---------------------------------------------------------- MRF helpers

Index mrf_difference_count(Index n, int dims) {
  if (dims == 1) return n + 1;
  const Index N = *exact_square_root(n);
  return 2 * N * (N + 1);
}

Vector mrf_differences(const Vector& x, int dims) {
  const Index n = x.size();
  if (dims == 1) {
    Vector d(n + 1);
    d[0] = n > 0 ? x[0] : 0.0;
    for (Index i = 1; i < n; ++i) d[i] = x[i] - x[i - 1];
    d[n] = n > 0 ? -x[n - 1] : 0.0;
    return d;
  }
  const auto Nopt = exact_square_root(n);
  if (!Nopt) throw InvalidArgument("2-D field needs a square number of elements");
  const Index N = *Nopt;
  Vector d(2 * N * (N + 1));
  // (I (x) D) x: differences down each column.
  Index k = 0;
  for (Index c = 0; c < N; ++c) {
    const double* col = x.data() + c * N;
    d[k++] = col[0];
    for (Index i = 1; i < N; ++i) d[k++] = col[i] - col[i - 1];
    d[k++] = -col[N - 1];
  }
  // (D (x) I) x: differences across columns.
  for (Index j = 0; j <= N; ++j)
    for (Index i = 0; i < N; ++i) {
      const double cur = j < N ? x[j * N + i] : 0.0;
      const double prev = j > 0 ? x[(j - 1) * N + i] : 0.0;
      d[k++] = cur - prev;
    }
  return d;
}

Vector mrf_differences_transpose(const Vector& g, Index n, int dims) {
  if (g.size() != mrf_difference_count(n, dims))
    throw DimensionError("difference transpose input", mrf_difference_count(n, dims), g.size());
  Vector x(n);
  if (dims == 1) {
    for (Index i = 0; i < n; ++i) x[i] = g[i] - g[i + 1];
    return x;
  }
  const Index N = *exact_square_root(n);
  for (Index c = 0; c < N; ++c) {
    const double* gc = g.data() + c * (N + 1);
    for (Index i = 0; i < N; ++i) x[c * N + i] = gc[i] - gc[i + 1];
  }
  const double* g2 = g.data() + N * (N + 1);
  for (Index c = 0; c < N; ++c)
    for (Index i = 0; i < N; ++i) x[c * N + i] += g2[c * N + i] - g2[(c + 1) * N + i];
  return x;
}

namespace {

class DifferenceOperator final : public LinearOperator {
 public:
  DifferenceOperator(Index n, int dims) : n_(n), dims_(dims), m_(mrf_difference_count(n, dims)) {}
  Index rows() const override { return m_; }
  Index cols() const override { return n_; }
  Vector apply(const Vector& x) const override {
    if (x.size() != n_) throw DimensionError("difference operator input", n_, x.size());
    return mrf_differences(x, dims_);
  }
  Vector apply_transpose(const Vector& y) const override {
    return mrf_differences_transpose(y, n_, dims_);
  }

 private:
  Index n_;
  int dims_;
  Index m_;
};

}  // namespace

std::shared_ptr<const LinearOperator> mrf_difference_operator(Index n, int dims) {
  if (dims == 2 && !exact_square_root(n)) throw InvalidArgument("2-D field needs a square number of elements");
  return std::make_shared<const DifferenceOperator>(n, dims);
}

double lmrf_functional(const Vector& x, int dims) {
  const double s = mrf_differences(x, dims).lpNorm<1>();
  return dims == 1 ? s : 0.5 * s;
}

// ------------------------------------------------------------ Distribution

namespace {

int dims_of(const Geometry& g) {
  const auto& v = g.base().variant();
  return std::holds_alternative<Image2D>(v) || std::holds_alternative<Continuous2D>(v) ? 2 : 1;
}

// Size from the first parameter whose dimension is known.
Geometry default_geometry(const std::optional<Geometry>& g, const Param& p, const Param* other = nullptr) {
  if (g) return *g;
  if (p.kind() == Param::Kind::model) return p.forward_model()->range_geometry();
  Index n = p.is_constant() ? p.value().size() : 0;
  if (n <= 1 && other && other->is_constant()) n = std::max(n, other->value().size());
  return Geometry::continuous_1d(std::max<Index>(n, 1));
}

}  // namespace

Distribution Distribution::gaussian(std::string name, Param mean, Param scale, CovTag tag,
                                    std::optional<Geometry> geometry) {
  Distribution d;
  d.family_ = Family::Gaussian;
  d.name_ = std::move(name);
  d.geometry_ = default_geometry(geometry, mean, &scale);
  d.tag_ = tag;
  if (scale.is_constant() && scale.value().size() != 1 && scale.value().size() != d.dim())
    throw DimensionError("Gaussian scale", d.dim(), scale.value().size());
  d.params_ = {{"mean", std::move(mean)}, {"scale", std::move(scale)}};
  return d;
}

Distribution Distribution::gaussian_dense(std::string name, Param mean, const Matrix& m, CovTag tag,
                                          std::optional<Geometry> geometry) {
  Distribution d;
  d.family_ = Family::Gaussian;
  d.name_ = std::move(name);
  d.geometry_ = geometry ? *geometry : Geometry::continuous_1d(m.rows());
  d.tag_ = tag;
  if (m.rows() != m.cols() || m.rows() != d.dim())
    throw DimensionError("Gaussian covariance matrix", d.dim(), m.rows());
  Matrix cov;
  switch (tag) {
    case CovTag::cov: cov = m; break;
    case CovTag::prec: cov = m.inverse(); break;
    case CovTag::sqrtcov: cov = m * m.transpose(); break;
    case CovTag::sqrtprec: cov = (m.transpose() * m).inverse(); break;
  }
  cov = 0.5 * (cov + cov.transpose()).eval();
  d.dense_cov_factor_ = std::make_shared<const CholeskyFactor>(cholesky_factor(cov));
  d.params_ = {{"mean", std::move(mean)}};
  return d;
}

Distribution Distribution::gamma(std::string name, Param shape, Param rate,
                                 std::optional<Geometry> geometry) {
  Distribution d;
  d.family_ = Family::Gamma;
  d.name_ = std::move(name);
  d.geometry_ = geometry ? *geometry : Geometry::continuous_1d(1);
  d.params_ = {{"shape", std::move(shape)}, {"rate", std::move(rate)}};
  return d;
}

Distribution Distribution::lognormal(std::string name, Param m, Param variance,
                                     std::optional<Geometry> geometry) {
  Distribution d;
  d.family_ = Family::Lognormal;
  d.name_ = std::move(name);
  d.geometry_ = default_geometry(geometry, m);
  d.params_ = {{"m", std::move(m)}, {"variance", std::move(variance)}};
  return d;
}

Distribution Distribution::uniform(std::string name, Param low, Param high,
                                   std::optional<Geometry> geometry) {
  Distribution d;
  d.family_ = Family::Uniform;
  d.name_ = std::move(name);
  d.geometry_ = default_geometry(geometry, low);
  d.params_ = {{"low", std::move(low)}, {"high", std::move(high)}};
  return d;
}

namespace {

Distribution make_mrf(Distribution d, int dims) {
  if (dims == 2 && !exact_square_root(d.dim()))
    throw InvalidArgument("2-D MRF needs a square image geometry");
  return d;
}

}  // namespace

Distribution Distribution::gmrf(std::string name, Param location, Param precision, Geometry geometry) {
  Distribution d;
  d.family_ = Family::GMRF;
  d.name_ = std::move(name);
  d.geometry_ = std::move(geometry);
  d.params_ = {{"location", std::move(location)}, {"precision", std::move(precision)}};
  d = make_mrf(std::move(d), d.mrf_dims());
  d.gmrf_cache_ = std::make_shared<GmrfFactorCache>();
  d.gmrf_cache_->n = d.dim();
  d.gmrf_cache_->dims = d.mrf_dims();
  d.mrf_logdet_base_ = log_det_laplacian(d.dim(), d.mrf_dims());
  return d;
}

Distribution Distribution::lmrf(std::string name, Param location, Param scale, Geometry geometry) {
  Distribution d;
  d.family_ = Family::LMRF;
  d.name_ = std::move(name);
  d.geometry_ = std::move(geometry);
  d.params_ = {{"location", std::move(location)}, {"scale", std::move(scale)}};
  return make_mrf(std::move(d), d.mrf_dims());
}

Distribution Distribution::cmrf(std::string name, Param location, Param scale, Geometry geometry) {
  Distribution d;
  d.family_ = Family::CMRF;
  d.name_ = std::move(name);
  d.geometry_ = std::move(geometry);
  d.params_ = {{"location", std::move(location)}, {"scale", std::move(scale)}};
  return make_mrf(std::move(d), d.mrf_dims());
}

Distribution Distribution::user_defined(std::string name, Geometry geometry, LogpdfFn logpdf,
                                        GradientFn gradient, SamplerFn sampler) {
  if (!logpdf) throw InvalidArgument("user-defined distribution needs a log-density");
  Distribution d;
  d.family_ = Family::UserDefined;
  d.name_ = std::move(name);
  d.geometry_ = std::move(geometry);
  d.user_logpdf_ = std::move(logpdf);
  d.user_gradient_ = std::move(gradient);
  d.user_sampler_ = std::move(sampler);
  return d;
}

std::string Distribution::family_name() const {
  switch (family_) {
    case Family::Gaussian: return "Gaussian";
    case Family::Gamma: return "Gamma";
    case Family::Lognormal: return "Lognormal";
    case Family::Uniform: return "Uniform";
    case Family::GMRF: return "GMRF";
    case Family::LMRF: return "LMRF";
    case Family::CMRF: return "CMRF";
    case Family::UserDefined: return "UserDefined";
  }
  return "?";
}

int Distribution::mrf_dims() const { return dims_of(geometry_); }

const Param& Distribution::param(const std::string& role) const {
  for (const auto& [k, v] : params_)
    if (k == role) return v;
  throw InvalidArgument(family_name() + " has no parameter '" + role + "'");
}

bool Distribution::has_param(const std::string& role) const {
  return std::any_of(params_.begin(), params_.end(), [&](const auto& p) { return p.first == role; });
}

std::vector<std::string> Distribution::conditioning_variables() const {
  std::vector<std::string> out;
  for (const auto& [role, p] : params_)
    for (const auto& dep : p.dependencies())
      if (std::find(out.begin(), out.end(), dep) == out.end()) out.push_back(dep);
  return out;
}

Distribution Distribution::condition(const Assignment& bindings) const {
  const auto vars = conditioning_variables();
  for (const auto& [k, v] : bindings)
    if (std::find(vars.begin(), vars.end(), k) == vars.end())
      throw InvalidArgument("cannot condition " + family_name() + " '" + name_ + "' on '" + k +
                            "'; conditioning variables are " + join_names(vars));
  return resolve(bindings);
}

Distribution Distribution::resolve(const Assignment& context) const {
  Distribution d = *this;
  for (auto& [role, p] : d.params_) p = p.bind(context);
  return d;
}

void Distribution::require_specified() const {
  const auto vars = conditioning_variables();
  if (!vars.empty())
    throw InvalidArgument(family_name() + " '" + name_ + "' has unresolved conditioning variables " +
                          join_names(vars));
}

Vector Distribution::broadcast(const Param& p, const char* role) const {
  Vector v = p.value();
  if (v.size() == 1 && dim() != 1) return Vector::Constant(dim(), v[0]);
  if (v.size() != dim()) throw DimensionError(std::string(family_name()) + " " + role, dim(), v.size());
  return v;
}

Vector Distribution::mean_vector() const {
  require_specified();
  if (family_ == Family::Gaussian) return broadcast(param("mean"), "mean");
  if (family_ == Family::GMRF || family_ == Family::LMRF || family_ == Family::CMRF)
    return broadcast(param("location"), "location");
  if (family_ == Family::Gamma) return broadcast(param("shape"), "shape").cwiseQuotient(broadcast(param("rate"), "rate"));
  if (family_ == Family::Lognormal) {
    const Vector m = broadcast(param("m"), "m");
    const Vector v = broadcast(param("variance"), "variance");
    return (m + 0.5 * v).array().exp().matrix();
  }
  if (family_ == Family::Uniform) return 0.5 * (broadcast(param("low"), "low") + broadcast(param("high"), "high"));
  throw CapabilityError("user-defined distribution has no mean");
}

Vector Distribution::variances() const {
  require_specified();
  if (family_ != Family::Gaussian || has_dense_covariance())
    throw CapabilityError("variances() applies to isotropic or diagonal Gaussians");
  const Vector v = broadcast(param("scale"), "scale");
  if ((v.array() <= 0.0).any()) throw DomainError("Gaussian scale must be positive");
  switch (tag_) {
    case CovTag::cov: return v;
    case CovTag::prec: return v.cwiseInverse();
    case CovTag::sqrtcov: return v.cwiseProduct(v);
    case CovTag::sqrtprec: return v.cwiseProduct(v).cwiseInverse();
  }
  return v;
}

Matrix Distribution::covariance() const {
  require_specified();
  if (family_ == Family::Gaussian) {
    if (dense_cov_factor_) {
      const Matrix L = dense_cov_factor_->to_dense();
      return L * L.transpose();
    }
    return variances().asDiagonal();
  }
  if (family_ == Family::GMRF)
    return gmrf_precision(dim(), mrf_parameter(), mrf_dims()).to_dense().inverse();
  throw CapabilityError(family_name() + " has no closed-form covariance");
}

double Distribution::mrf_parameter() const {
  require_specified();
  const char* role = family_ == Family::GMRF ? "precision" : "scale";
  const Vector v = param(role).value();
  if (v.size() != 1) throw DimensionError(std::string("MRF ") + role, 1, v.size());
  if (!(v[0] > 0.0)) throw DomainError(std::string("MRF ") + role + " must be positive");
  return v[0];
}

std::shared_ptr<const LinearOperator> Distribution::sqrt_precision() const {
  require_specified();
  if (family_ == Family::GMRF)
    return std::make_shared<const RowScaledOperator>(mrf_difference_operator(dim(), mrf_dims()),
                                                     std::sqrt(mrf_parameter()));
  if (family_ != Family::Gaussian) throw CapabilityError(family_name() + " has no square-root precision");
  if (dense_cov_factor_) return std::make_shared<const InverseFactorOperator>(dense_cov_factor_);
  auto id = std::make_shared<const MatrixOperator>(MatrixOperator::identity(dim()));
  return std::make_shared<const RowScaledOperator>(id, variances().cwiseSqrt().cwiseInverse());
}

double Distribution::logpdf(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError(family_name() + " logpdf input", dim(), x.size());
  if (family_ == Family::UserDefined) return user_logpdf_(x);
  require_specified();
  const auto n = static_cast<double>(dim());
  switch (family_) {
    case Family::Gaussian: {
      const Vector r = x - mean_vector();
      if (dense_cov_factor_) {
        const Vector w = dense_cov_factor_->solve_lower(r);
        return -0.5 * w.squaredNorm() - 0.5 * dense_cov_factor_->log_determinant() - 0.5 * n * kLog2Pi;
      }
      const Vector v = variances();
      return -0.5 * (r.array().square() / v.array()).sum() - 0.5 * v.array().log().sum() - 0.5 * n * kLog2Pi;
    }
    case Family::Gamma: {
      const Vector a = broadcast(param("shape"), "shape");
      const Vector b = broadcast(param("rate"), "rate");
      if ((a.array() <= 0.0).any() || (b.array() <= 0.0).any())
        throw DomainError("Gamma shape and rate must be positive");
      if ((x.array() <= 0.0).any()) return kNegInf;
      double s = 0.0;
      for (Index i = 0; i < dim(); ++i)
        s += a[i] * std::log(b[i]) - std::lgamma(a[i]) + (a[i] - 1.0) * std::log(x[i]) - b[i] * x[i];
      return s;
    }
    case Family::Lognormal: {
      const Vector m = broadcast(param("m"), "m");
      const Vector v = broadcast(param("variance"), "variance");
      if ((x.array() <= 0.0).any()) return kNegInf;
      const Vector lx = x.array().log().matrix();
      return (-lx.array() - 0.5 * (2.0 * std::numbers::pi * v.array()).log() -
              (lx - m).array().square() / (2.0 * v.array()))
          .sum();
    }
    case Family::Uniform: {
      const Vector lo = broadcast(param("low"), "low");
      const Vector hi = broadcast(param("high"), "high");
      if ((x.array() < lo.array()).any() || (x.array() > hi.array()).any()) return kNegInf;
      return -(hi - lo).array().log().sum();
    }
    case Family::GMRF: {
      const double d = mrf_parameter();
      const Vector diff = mrf_differences(x - mean_vector(), mrf_dims());
      // x^T L x equals the squared norm of all first differences.
      return -0.5 * d * diff.squaredNorm() + 0.5 * n * std::log(d) + 0.5 * mrf_logdet_base_ - 0.5 * n * kLog2Pi;
    }
    case Family::LMRF: {
      const double b = mrf_parameter();
      const auto terms = static_cast<double>(mrf_difference_count(dim(), mrf_dims()));
      return -terms * std::log(2.0 * b) - lmrf_functional(x - mean_vector(), mrf_dims()) / b;
    }
    case Family::CMRF: {
      const double b = mrf_parameter();
      const Vector diff = mrf_differences(x - mean_vector(), mrf_dims());
      return (std::log(b / std::numbers::pi) - (b * b + diff.array().square()).log()).sum();
    }
    case Family::UserDefined:
      break;
  }
  return kNegInf;
}

bool Distribution::has_gradient() const {
  switch (family_) {
    case Family::Gaussian:
    case Family::Gamma:
    case Family::Lognormal:
    case Family::GMRF:
    case Family::CMRF:
      return true;
    case Family::UserDefined:
      return static_cast<bool>(user_gradient_);
    case Family::Uniform:
    case Family::LMRF:
      return false;
  }
  return false;
}

Vector Distribution::gradient(const Vector& x) const {
  if (x.size() != dim()) throw DimensionError(family_name() + " gradient input", dim(), x.size());
  if (!has_gradient()) throw CapabilityError(family_name() + " has no gradient");
  if (family_ == Family::UserDefined) return user_gradient_(x);
  require_specified();
  switch (family_) {
    case Family::Gaussian: {
      const Vector r = x - mean_vector();
      if (dense_cov_factor_) return -dense_cov_factor_->solve(r);
      return -r.cwiseQuotient(variances());
    }
    case Family::Gamma: {
      if ((x.array() <= 0.0).any()) throw DomainError("Gamma gradient undefined at x <= 0");
      const Vector a = broadcast(param("shape"), "shape");
      const Vector b = broadcast(param("rate"), "rate");
      return ((a.array() - 1.0) / x.array() - b.array()).matrix();
    }
    case Family::Lognormal: {
      if ((x.array() <= 0.0).any()) throw DomainError("Lognormal gradient undefined at x <= 0");
      const Vector m = broadcast(param("m"), "m");
      const Vector v = broadcast(param("variance"), "variance");
      const Eigen::ArrayXd lx = x.array().log();
      return (-1.0 / x.array() - (lx - m.array()) / (v.array() * x.array())).matrix();
    }
    case Family::GMRF: {
      const double d = mrf_parameter();
      const Vector diff = mrf_differences(x - mean_vector(), mrf_dims());
      return -d * mrf_differences_transpose(diff, dim(), mrf_dims());
    }
    case Family::CMRF: {
      const double b = mrf_parameter();
      const Vector diff = mrf_differences(x - mean_vector(), mrf_dims());
      const Vector g = (-2.0 * diff.array() / (b * b + diff.array().square())).matrix();
      return mrf_differences_transpose(g, dim(), mrf_dims());
    }
    default:
      break;
  }
  throw CapabilityError(family_name() + " has no gradient");
}

Vector Distribution::location_gradient(const Vector& x) const {
  if (family_ == Family::Gaussian || family_ == Family::GMRF || family_ == Family::CMRF) return -gradient(x);
  throw CapabilityError("gradient with respect to the location of " + family_name() + " is not available");
}

bool Distribution::has_direct_sampler() const {
  switch (family_) {
    case Family::Gaussian:
    case Family::Gamma:
    case Family::Lognormal:
    case Family::Uniform:
    case Family::GMRF:
      return true;
    case Family::UserDefined:
      return static_cast<bool>(user_sampler_);
    case Family::LMRF:
    case Family::CMRF:
      return false;
  }
  return false;
}

Vector Distribution::sample_one(Rng& rng) const {
  if (!has_direct_sampler())
    throw CapabilityError(family_name() + " has no direct sampler; use an MCMC sampler instead");
  if (family_ == Family::UserDefined) return user_sampler_(rng);
  require_specified();
  std::normal_distribution<double> normal;
  auto z = [&](Index n) {
    Vector v(n);
    for (Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };
  switch (family_) {
    case Family::Gaussian:
      if (dense_cov_factor_) return mean_vector() + dense_cov_factor_->multiply_lower(z(dim()));
      return mean_vector() + variances().cwiseSqrt().cwiseProduct(z(dim()));
    case Family::Gamma: {
      const Vector a = broadcast(param("shape"), "shape");
      const Vector b = broadcast(param("rate"), "rate");
      Vector out(dim());
      for (Index i = 0; i < dim(); ++i) out[i] = std::gamma_distribution<double>(a[i], 1.0 / b[i])(rng);
      return out;
    }
    case Family::Lognormal: {
      const Vector m = broadcast(param("m"), "m");
      const Vector v = broadcast(param("variance"), "variance");
      return (m + v.cwiseSqrt().cwiseProduct(z(dim()))).array().exp().matrix();
    }
    case Family::Uniform: {
      const Vector lo = broadcast(param("low"), "low");
      const Vector hi = broadcast(param("high"), "high");
      std::uniform_real_distribution<double> u;
      Vector out(dim());
      for (Index i = 0; i < dim(); ++i) out[i] = lo[i] + (hi[i] - lo[i]) * u(rng);
      return out;
    }
    case Family::GMRF: {
      const CholeskyFactor& L = gmrf_cache_->get();
      return mean_vector() + L.solve_upper(z(dim())) / std::sqrt(mrf_parameter());
    }
    default:
      break;
  }
  throw CapabilityError(family_name() + " has no direct sampler");
}

Samples Distribution::sample(Rng& rng, Index n) const {
  Matrix draws(n, dim());
  for (Index i = 0; i < n; ++i) draws.row(i) = sample_one(rng).transpose();
  return Samples(std::move(draws), geometry_, Provenance{0, "direct", 0});
}

Vector Distribution::default_point() const {
  require_specified();
  switch (family_) {
    case Family::Gaussian:
    case Family::GMRF:
    case Family::LMRF:
    case Family::CMRF:
    case Family::Uniform:
      return mean_vector();
    case Family::Gamma:
      // Vague hyperpriors have means far from plausible values.
      return Vector::Ones(dim());
    case Family::Lognormal:
      return broadcast(param("m"), "m").array().exp().matrix();
    case Family::UserDefined:
      return Vector::Zero(dim());
  }
  return Vector::Zero(dim());
}

std::string Distribution::describe() const {
  std::string s = family_name() + "(" + name_ + ") on " + geometry_.describe() + ".";
  const auto vars = conditioning_variables();
  if (!vars.empty()) s += " Conditioning variables " + join_names(vars) + ".";
  return s;
}

}  // namespace invuq
