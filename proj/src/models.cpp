#include "invuq/models.hpp"

#include <cmath>
#include <numbers>

#include "invuq/errors.hpp"

namespace invuq {

ForwardModel ForwardModel::linear(std::shared_ptr<const LinearOperator> op, Geometry domain,
                                  Geometry range) {
  if (!op) throw InvalidArgument("linear model needs an operator");
  if (op->cols() != domain.par_dim())
    throw DimensionError("linear model domain geometry", op->cols(), domain.par_dim());
  if (op->rows() != range.par_dim())
    throw DimensionError("linear model range geometry", op->rows(), range.par_dim());
  ForwardModel m;
  m.kind_ = Kind::linear;
  m.op_ = std::move(op);
  m.domain_ = std::move(domain);
  m.range_ = std::move(range);
  return m;
}

ForwardModel ForwardModel::linear(std::shared_ptr<const LinearOperator> op) {
  const Index r = op->rows(), c = op->cols();
  return linear(std::move(op), Geometry::continuous_1d(c), Geometry::continuous_1d(r));
}

ForwardModel ForwardModel::nonlinear(ForwardFn forward, std::optional<JacobianFn> jacobian,
                                     Geometry domain, Geometry range) {
  ForwardModel m;
  m.kind_ = Kind::nonlinear;
  m.forward_ = std::move(forward);
  m.jacobian_ = std::move(jacobian);
  m.domain_ = std::move(domain);
  m.range_ = std::move(range);
  return m;
}

Vector ForwardModel::forward(const Vector& x) const {
  if (x.size() != domain_dim()) throw DimensionError("forward model input", domain_dim(), x.size());
  Vector y = is_linear() ? op_->apply(x) : forward_(x);
  if (y.size() != range_dim()) throw DimensionError("forward model output", range_dim(), y.size());
  return y;
}

Vector ForwardModel::adjoint(const Vector& y) const {
  if (!is_linear()) throw CapabilityError("adjoint is only defined for linear models");
  if (y.size() != range_dim()) throw DimensionError("adjoint input", range_dim(), y.size());
  return op_->apply_transpose(y);
}

Matrix ForwardModel::jacobian(const Vector& x) const {
  if (x.size() != domain_dim()) throw DimensionError("jacobian input", domain_dim(), x.size());
  if (is_linear()) {
    if (const auto* mo = dynamic_cast<const MatrixOperator*>(op_.get())) return mo->to_dense();
    Matrix J(range_dim(), domain_dim());
    for (Index j = 0; j < domain_dim(); ++j) J.col(j) = op_->apply(Vector::Unit(domain_dim(), j));
    return J;
  }
  if (!jacobian_) throw CapabilityError("model has no Jacobian");
  return (*jacobian_)(x);
}

Vector ForwardModel::jacobian_transpose_apply(const Vector& x, const Vector& v) const {
  if (is_linear()) return adjoint(v);
  return jacobian(x).transpose() * v;
}

const std::shared_ptr<const LinearOperator>& ForwardModel::op() const {
  if (!is_linear()) throw CapabilityError("non-linear model has no operator");
  return op_;
}

ForwardModel ForwardModel::as_nonlinear() const {
  if (!is_linear()) return *this;
  auto op = op_;
  const Index n = domain_dim();
  return nonlinear([op](const Vector& x) { return op->apply(x); },
                   JacobianFn([op, n](const Vector&) {
                     Matrix J(op->rows(), n);
                     for (Index j = 0; j < n; ++j) J.col(j) = op->apply(Vector::Unit(n, j));
                     return J;
                   }),
                   domain_, range_);
}

Vector gaussian_kernel(double psf_std) {
  if (!(psf_std > 0.0)) throw InvalidArgument("psf_std must be positive");
  const auto half = static_cast<Index>(std::floor(4.0 * psf_std));
  Vector k(2 * half + 1);
  for (Index i = -half; i <= half; ++i) {
    const double u = static_cast<double>(i) / psf_std;
    k[i + half] = std::exp(-0.5 * u * u);
  }
  return k / k.sum();
}

MatrixOperator blur_matrix_1d(Index n, double psf_std) {
  if (n < 1) throw InvalidArgument("blur size must be at least 1");
  const Vector k = gaussian_kernel(psf_std);
  const Index half = std::min<Index>((k.size() - 1) / 2, n - 1);
  const Index full = (k.size() - 1) / 2;
  Matrix band(2 * half + 1, n);
  for (Index off = -half; off <= half; ++off) band.row(off + half).setConstant(k[off + full]);
  return MatrixOperator::banded(n, n, half, half, std::move(band), true);
}

ForwardModel convolution_model_1d(Index n, double psf_std, double lo, double hi) {
  auto op = std::make_shared<const MatrixOperator>(blur_matrix_1d(n, psf_std));
  return ForwardModel::linear(op, Geometry::continuous_1d(n, lo, hi), Geometry::continuous_1d(n, lo, hi));
}

ForwardModel convolution_model_2d(Index N, double psf_std) {
  MatrixOperator B = blur_matrix_1d(N, psf_std);
  auto op = std::make_shared<const MatrixOperator>(MatrixOperator::kronecker(B, B));
  return ForwardModel::linear(op, Geometry::image_2d(N, N), Geometry::image_2d(N, N));
}

ForwardModel gravity_model(Index m) {
  if (m < 1) throw InvalidArgument("gravity model needs at least one observation point");
  const Vector xi = m == 1 ? Vector(Vector::Zero(1)) : Vector(Vector::LinSpaced(m, -8000.0, 8000.0));
  constexpr double G = kGravitationalConstant;
  constexpr double pi = std::numbers::pi;
  auto check = [](const Vector& p) {
    if (p.size() != 3) throw DimensionError("gravity parameters", 3, p.size());
    if (!(p[0] > 0.0)) throw DomainError("gravity model requires depth z > 0");
  };
  auto forward = [xi, check](const Vector& p) {
    check(p);
    const double z = p[0], rho = p[1], r = p[2];
    Vector y(xi.size());
    for (Index i = 0; i < xi.size(); ++i) {
      const double t = xi[i] / z;
      y[i] = 4.0 / 3.0 * pi * G * rho * r * r * r / (z * z) * std::pow(1.0 / (1.0 + t * t), 1.5);
    }
    return y;
  };
  auto jacobian = [xi, check](const Vector& p) {
    check(p);
    const double z = p[0], rho = p[1], r = p[2];
    Matrix J(xi.size(), 3);
    for (Index i = 0; i < xi.size(); ++i) {
      const double x2 = xi[i] * xi[i];
      const double s = x2 + z * z;
      const double f = std::pow(z * z / s, 1.5);
      J(i, 0) = -4.0 / 3.0 * pi * G * rho * r * r * r * z * (2.0 * z * z - x2) *
                std::pow(z * z / s, -0.5) / (s * s * s);
      J(i, 1) = 4.0 / 3.0 * pi * G * (r * r * r / (z * z)) * f;
      J(i, 2) = 4.0 * pi * G * (rho * r * r / (z * z)) * f;
    }
    return J;
  };
  return ForwardModel::nonlinear(forward, ForwardModel::JacobianFn(jacobian),
                                 Geometry::discrete({"z", "rho", "r"}),
                                 Geometry::continuous_1d(m, -8000.0, 8000.0));
}

ForwardModel linear_model_from_csv(const std::filesystem::path& path) {
  Matrix A = read_csv_matrix(path);
  if (A.size() == 0) throw InvalidArgument("empty model matrix in " + path.string());
  return ForwardModel::linear(std::make_shared<const MatrixOperator>(MatrixOperator::dense(std::move(A))));
}

}  // namespace invuq
