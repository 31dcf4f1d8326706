#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invuq/geometry.hpp"
#include "invuq/linalg.hpp"
#include "invuq/models.hpp"
#include "invuq/samples.hpp"
#include "invuq/types.hpp"

namespace invuq {

/// A distribution parameter: a concrete value or a deferred function of named
/// variables. The deferral shape is kept so conjugate structure can be recognized.
class Param {
 public:
  enum class Kind { constant, variable, reciprocal, model, function };
  using Fn = std::function<Vector(const Assignment&)>;
  // Vector-Jacobian product: upstream gradient -> gradient per dependency.
  using Vjp = std::function<Assignment(const Assignment&, const Vector&)>;

  Param() : Param(Vector()) {}
  Param(double v) : Param(scalar_vector(v)) {}
  Param(Vector v);

  static Param constant(Vector v) { return Param(std::move(v)); }
  /// The value of variable `name` itself.
  static Param variable(std::string name);
  /// 1 / value of `name` (elementwise).
  static Param reciprocal(std::string name);
  /// model(value of `name`).
  static Param model(std::shared_ptr<const ForwardModel> m, std::string name);
  static Param function(std::vector<std::string> deps, Fn fn, Vjp vjp = nullptr);

  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::constant; }
  const Vector& value() const { return value_; }
  const std::string& variable_name() const { return var_; }
  const std::shared_ptr<const ForwardModel>& forward_model() const { return model_; }
  bool has_vjp() const;

  std::vector<std::string> dependencies() const;
  Vector evaluate(const Assignment& a) const;
  /// Gradient of <upstream, param(a)> with respect to each dependency.
  Assignment vjp(const Assignment& a, const Vector& upstream) const;
  /// Substitutes the bound names; unbound dependencies stay deferred.
  Param bind(const Assignment& a) const;

 private:
  Kind kind_ = Kind::constant;
  Vector value_;
  std::string var_;
  std::shared_ptr<const ForwardModel> model_;
  std::vector<std::string> deps_;
  Fn fn_;
  Vjp vjp_;
};

enum class CovTag { cov, prec, sqrtcov, sqrtprec };

struct GmrfFactorCache;

class Distribution {
 public:
  enum class Family { Gaussian, Gamma, Lognormal, Uniform, GMRF, LMRF, CMRF, UserDefined };

  using LogpdfFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;
  using SamplerFn = std::function<Vector(Rng&)>;

  /// Isotropic (size-1) or diagonal `scale`, interpreted per `tag`.
  static Distribution gaussian(std::string name, Param mean, Param scale,
                               CovTag tag = CovTag::cov, std::optional<Geometry> geometry = {});
  /// Dense constant covariance-type matrix interpreted per `tag`.
  static Distribution gaussian_dense(std::string name, Param mean, const Matrix& m,
                                     CovTag tag = CovTag::cov,
                                     std::optional<Geometry> geometry = {});
  /// Gamma with shape and rate.
  static Distribution gamma(std::string name, Param shape, Param rate,
                            std::optional<Geometry> geometry = {});
  /// exp of Gaussian(m, variance).
  static Distribution lognormal(std::string name, Param m, Param variance,
                                std::optional<Geometry> geometry = {});
  static Distribution uniform(std::string name, Param low, Param high,
                              std::optional<Geometry> geometry = {});
  /// Precision d * L (1-D) or d * (I (x) L + L (x) I) for image geometries.
  static Distribution gmrf(std::string name, Param location, Param precision, Geometry geometry);
  static Distribution lmrf(std::string name, Param location, Param scale, Geometry geometry);
  static Distribution cmrf(std::string name, Param location, Param scale, Geometry geometry);
  static Distribution user_defined(std::string name, Geometry geometry, LogpdfFn logpdf,
                                   GradientFn gradient = nullptr, SamplerFn sampler = nullptr);

  Family family() const { return family_; }
  std::string family_name() const;
  const std::string& name() const { return name_; }
  const Geometry& geometry() const { return geometry_; }
  Index dim() const { return geometry_.par_dim(); }
  /// 1 for signals, 2 for images (MRF families).
  int mrf_dims() const;
  CovTag cov_tag() const { return tag_; }
  bool has_dense_covariance() const { return dense_cov_factor_ != nullptr; }

  /// Parameter by role: mean, scale, shape, rate, m, variance, low, high,
  /// location, precision.
  const Param& param(const std::string& role) const;
  bool has_param(const std::string& role) const;

  std::vector<std::string> conditioning_variables() const;
  bool is_fully_specified() const { return conditioning_variables().empty(); }

  /// Binds conditioning variables; every bound name must be one of them.
  Distribution condition(const Assignment& bindings) const;
  /// Binds the names it depends on and ignores the rest.
  Distribution resolve(const Assignment& context) const;

  double logpdf(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  bool has_gradient() const;
  /// Gradient of the log-density with respect to its location/mean.
  Vector location_gradient(const Vector& x) const;
  bool has_direct_sampler() const;
  Vector sample_one(Rng& rng) const;
  Samples sample(Rng& rng, Index n) const;

  // Concrete values for fully specified distributions.
  Vector mean_vector() const;     // Gaussian mean or MRF location (broadcast)
  Vector variances() const;       // Gaussian isotropic/diagonal variances
  Matrix covariance() const;      // dense Gaussian covariance (small problems)
  double mrf_parameter() const;   // d for GMRF, b for LMRF/CMRF
  /// Square root of the precision: C with C^T C = Q (Gaussian and GMRF).
  std::shared_ptr<const LinearOperator> sqrt_precision() const;
  /// Point used to start chains (mean / location / mode-like value).
  Vector default_point() const;

  std::string describe() const;

 private:
  Distribution() = default;
  void require_specified() const;
  Vector broadcast(const Param& p, const char* role) const;

  Family family_ = Family::Gaussian;
  std::string name_;
  Geometry geometry_;
  std::vector<std::pair<std::string, Param>> params_;
  CovTag tag_ = CovTag::cov;
  // Lower Cholesky factor of the dense covariance.
  std::shared_ptr<const CholeskyFactor> dense_cov_factor_;
  std::shared_ptr<GmrfFactorCache> gmrf_cache_;
  double mrf_logdet_base_ = 0.0;
  LogpdfFn user_logpdf_;
  GradientFn user_gradient_;
  SamplerFn user_sampler_;
};

/// T(x) for LMRF: ||D x||_1 in 1-D, half the sum of both axis differences in 2-D.
double lmrf_functional(const Vector& x, int dims);
/// Number of difference terms: n + 1 in 1-D, 2N(N+1) in 2-D.
Index mrf_difference_count(Index n, int dims);
/// All first differences (1-D: D x; 2-D: [(I (x) D) x; (D (x) I) x]).
Vector mrf_differences(const Vector& x, int dims);
/// Adjoint of mrf_differences.
Vector mrf_differences_transpose(const Vector& g, Index n, int dims);
/// Stacked difference operator for `mrf_differences`.
std::shared_ptr<const LinearOperator> mrf_difference_operator(Index n, int dims);

}  // namespace invuq
