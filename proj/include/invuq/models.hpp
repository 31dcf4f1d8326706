#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>

#include "invuq/geometry.hpp"
#include "invuq/linalg.hpp"
#include "invuq/types.hpp"

namespace invuq {

/// Map from a parameter space to a data space.
class ForwardModel {
 public:
  enum class Kind { linear, nonlinear };

  using ForwardFn = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;

  static ForwardModel linear(std::shared_ptr<const LinearOperator> op, Geometry domain,
                             Geometry range);
  static ForwardModel linear(std::shared_ptr<const LinearOperator> op);
  static ForwardModel nonlinear(ForwardFn forward, std::optional<JacobianFn> jacobian,
                                Geometry domain, Geometry range);

  Kind kind() const { return kind_; }
  bool is_linear() const { return kind_ == Kind::linear; }
  bool has_jacobian() const { return is_linear() || jacobian_.has_value(); }

  const Geometry& domain_geometry() const { return domain_; }
  const Geometry& range_geometry() const { return range_; }
  Index domain_dim() const { return domain_.par_dim(); }
  Index range_dim() const { return range_.par_dim(); }

  Vector forward(const Vector& x) const;
  Vector adjoint(const Vector& y) const;
  Matrix jacobian(const Vector& x) const;
  /// J(x)^T v; matrix-free for linear models.
  Vector jacobian_transpose_apply(const Vector& x, const Vector& v) const;

  /// Underlying operator of a linear model.
  const std::shared_ptr<const LinearOperator>& op() const;

  /// Same map with the linear structure hidden.
  ForwardModel as_nonlinear() const;

 private:
  Kind kind_ = Kind::linear;
  std::shared_ptr<const LinearOperator> op_;
  ForwardFn forward_;
  std::optional<JacobianFn> jacobian_;
  Geometry domain_;
  Geometry range_;
};

/// Normalized Gaussian blur kernel of half-width floor(4 sigma).
Vector gaussian_kernel(double psf_std);

/// n x n banded blur matrix, zero boundary.
MatrixOperator blur_matrix_1d(Index n, double psf_std);

ForwardModel convolution_model_1d(Index n, double psf_std, double lo = 0.0, double hi = 1.0);
ForwardModel convolution_model_2d(Index N, double psf_std);

inline constexpr double kGravitationalConstant = 6.6743e-11;

/// Buried-sphere gravity anomaly over an equispaced grid on [-8000, 8000].
ForwardModel gravity_model(Index m = 100);

ForwardModel linear_model_from_csv(const std::filesystem::path& path);

}  // namespace invuq
