#include "invuq/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "invuq/errors.hpp"

namespace invuq {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

// y = A x (or A^T x) for a banded A, with strided input/output.
void banded_apply(const BandedRep& b, bool transpose, const double* x,
                  Index incx, double* y, Index incy) {
  const Index out_len = transpose ? b.cols : b.rows;
  for (Index i = 0; i < out_len; ++i) y[i * incy] = 0.0;
  for (Index i = 0; i < b.rows; ++i) {
    const Index kmin = std::max(-b.lower, -i);
    const Index kmax = std::min(b.upper, b.cols - 1 - i);
    if (!transpose) {
      double acc = 0.0;
      for (Index k = kmin; k <= kmax; ++k) acc += b.band(k + b.lower, i) * x[(i + k) * incx];
      y[i * incy] = acc;
    } else {
      const double xi = x[i * incx];
      for (Index k = kmin; k <= kmax; ++k) y[(i + k) * incy] += b.band(k + b.lower, i) * xi;
    }
  }
}

// Applies op (or op^T) to every column of X.
Matrix apply_columns(const MatrixOperator& op, bool transpose, const Matrix& X) {
  const Index out_rows = transpose ? op.cols() : op.rows();
  Matrix Y(out_rows, X.cols());
  if (const auto* b = std::get_if<BandedRep>(&op.representation())) {
    for (Index c = 0; c < X.cols(); ++c)
      banded_apply(*b, transpose, X.col(c).data(), 1, Y.col(c).data(), 1);
    return Y;
  }
  for (Index c = 0; c < X.cols(); ++c) {
    Vector col = X.col(c);
    Y.col(c) = transpose ? op.apply_transpose(col) : op.apply(col);
  }
  return Y;
}

// Applies op (or op^T) to every row of X: returns X op^T (or X op).
Matrix apply_rows(const MatrixOperator& op, bool transpose, const Matrix& X) {
  const Index out_cols = transpose ? op.cols() : op.rows();
  Matrix Y(X.rows(), out_cols);
  if (const auto* b = std::get_if<BandedRep>(&op.representation())) {
    for (Index r = 0; r < X.rows(); ++r)
      banded_apply(*b, transpose, X.data() + r, X.rows(), Y.data() + r, Y.rows());
    return Y;
  }
  for (Index r = 0; r < X.rows(); ++r) {
    Vector row = X.row(r).transpose();
    Y.row(r) = (transpose ? op.apply_transpose(row) : op.apply(row)).transpose();
  }
  return Y;
}

void check_length(const char* what, Index expected, Index actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

}  // namespace

MatrixOperator MatrixOperator::dense(Matrix m) { return MatrixOperator(DenseRep{std::move(m)}); }

MatrixOperator MatrixOperator::identity(Index n) {
  return banded(n, n, 0, 0, Matrix::Ones(1, n), true);
}

MatrixOperator MatrixOperator::banded(Index rows, Index cols, Index lower, Index upper,
                                      Matrix band, bool symmetric) {
  if (band.rows() != lower + upper + 1 || band.cols() != rows)
    throw InvalidArgument("banded storage must be (lower + upper + 1) x rows");
  return MatrixOperator(BandedRep{rows, cols, lower, upper, std::move(band), symmetric});
}

MatrixOperator MatrixOperator::kronecker_sum(MatrixOperator factor, double scale) {
  if (factor.rows() != factor.cols())
    throw InvalidArgument("Kronecker sum factor must be square");
  return MatrixOperator(
      KroneckerSumRep{std::make_shared<const MatrixOperator>(std::move(factor)), scale});
}

MatrixOperator MatrixOperator::kronecker(MatrixOperator outer, MatrixOperator inner) {
  return MatrixOperator(KroneckerRep{std::make_shared<const MatrixOperator>(std::move(outer)),
                                     std::make_shared<const MatrixOperator>(std::move(inner))});
}

Index MatrixOperator::rows() const {
  return std::visit(Overloaded{
                        [](const DenseRep& r) { return r.m.rows(); },
                        [](const BandedRep& r) { return r.rows; },
                        [](const KroneckerSumRep& r) { return r.factor->rows() * r.factor->rows(); },
                        [](const KroneckerRep& r) { return r.outer->rows() * r.inner->rows(); },
                    },
                    rep_);
}

Index MatrixOperator::cols() const {
  return std::visit(Overloaded{
                        [](const DenseRep& r) { return r.m.cols(); },
                        [](const BandedRep& r) { return r.cols; },
                        [](const KroneckerSumRep& r) { return r.factor->cols() * r.factor->cols(); },
                        [](const KroneckerRep& r) { return r.outer->cols() * r.inner->cols(); },
                    },
                    rep_);
}

Vector MatrixOperator::apply(const Vector& x) const {
  check_length("MatrixOperator::apply", cols(), x.size());
  return std::visit(
      Overloaded{
          [&](const DenseRep& r) -> Vector { return r.m * x; },
          [&](const BandedRep& r) -> Vector {
            Vector y(r.rows);
            banded_apply(r, false, x.data(), 1, y.data(), 1);
            return y;
          },
          [&](const KroneckerSumRep& r) -> Vector {
            const Index N = r.factor->rows();
            const Matrix X = Eigen::Map<const Matrix>(x.data(), N, N);
            Matrix Y = apply_columns(*r.factor, false, X) + apply_rows(*r.factor, false, X);
            Y *= r.scale;
            return Eigen::Map<const Vector>(Y.data(), Y.size());
          },
          [&](const KroneckerRep& r) -> Vector {
            const Matrix X = Eigen::Map<const Matrix>(x.data(), r.inner->cols(), r.outer->cols());
            Matrix Y = apply_rows(*r.outer, false, apply_columns(*r.inner, false, X));
            return Eigen::Map<const Vector>(Y.data(), Y.size());
          },
      },
      rep_);
}

Vector MatrixOperator::apply_transpose(const Vector& y) const {
  check_length("MatrixOperator::apply_transpose", rows(), y.size());
  return std::visit(
      Overloaded{
          [&](const DenseRep& r) -> Vector { return r.m.transpose() * y; },
          [&](const BandedRep& r) -> Vector {
            Vector x(r.cols);
            banded_apply(r, true, y.data(), 1, x.data(), 1);
            return x;
          },
          [&](const KroneckerSumRep& r) -> Vector {
            const Index N = r.factor->rows();
            const Matrix Y = Eigen::Map<const Matrix>(y.data(), N, N);
            Matrix X = apply_columns(*r.factor, true, Y) + apply_rows(*r.factor, true, Y);
            X *= r.scale;
            return Eigen::Map<const Vector>(X.data(), X.size());
          },
          [&](const KroneckerRep& r) -> Vector {
            const Matrix Y = Eigen::Map<const Matrix>(y.data(), r.inner->rows(), r.outer->rows());
            Matrix X = apply_rows(*r.outer, true, apply_columns(*r.inner, true, Y));
            return Eigen::Map<const Vector>(X.data(), X.size());
          },
      },
      rep_);
}

double MatrixOperator::entry(Index i, Index j) const {
  return std::visit(
      Overloaded{
          [&](const DenseRep& r) { return r.m(i, j); },
          [&](const BandedRep& r) {
            const Index k = j - i;
            if (k < -r.lower || k > r.upper || i >= r.rows || j >= r.cols) return 0.0;
            return r.band(k + r.lower, i);
          },
          [&](const KroneckerSumRep& r) {
            const Index N = r.factor->rows();
            const Index a = i / N, ii = i % N, b = j / N, jj = j % N;
            double v = 0.0;
            if (a == b) v += r.factor->entry(ii, jj);
            if (ii == jj) v += r.factor->entry(a, b);
            return r.scale * v;
          },
          [&](const KroneckerRep& r) {
            const Index br = r.inner->rows(), bc = r.inner->cols();
            return r.outer->entry(i / br, j / bc) * r.inner->entry(i % br, j % bc);
          },
      },
      rep_);
}

Matrix MatrixOperator::to_dense() const {
  const bool kronecker = std::holds_alternative<KroneckerSumRep>(rep_) ||
                         std::holds_alternative<KroneckerRep>(rep_);
  if (kronecker && std::max(rows(), cols()) >
                       kMaxKroneckerDenseSide * kMaxKroneckerDenseSide) {
    throw CapabilityError("refusing to materialize a Kronecker operator larger than " +
                          std::to_string(kMaxKroneckerDenseSide) + "^2");
  }
  if (const auto* d = std::get_if<DenseRep>(&rep_)) return d->m;
  Matrix m(rows(), cols());
  for (Index j = 0; j < cols(); ++j)
    for (Index i = 0; i < rows(); ++i) m(i, j) = entry(i, j);
  return m;
}

MatrixOperator MatrixOperator::scaled(double factor) const {
  return std::visit(
      Overloaded{
          [&](const DenseRep& r) { return dense(factor * r.m); },
          [&](const BandedRep& r) {
            return banded(r.rows, r.cols, r.lower, r.upper, factor * r.band, r.symmetric);
          },
          [&](const KroneckerSumRep& r) {
            return MatrixOperator(KroneckerSumRep{r.factor, factor * r.scale});
          },
          [&](const KroneckerRep& r) {
            return MatrixOperator(KroneckerRep{
                std::make_shared<const MatrixOperator>(r.outer->scaled(factor)), r.inner});
          },
      },
      rep_);
}

std::optional<Index> MatrixOperator::symmetric_bandwidth() const {
  if (const auto* b = std::get_if<BandedRep>(&rep_)) {
    if (b->symmetric && b->rows == b->cols) return b->lower;
    return std::nullopt;
  }
  if (const auto* k = std::get_if<KroneckerSumRep>(&rep_)) {
    if (auto p = k->factor->symmetric_bandwidth()) return *p * k->factor->rows();
    return std::nullopt;
  }
  if (const auto* d = std::get_if<DenseRep>(&rep_)) {
    if (d->m.rows() == d->m.cols() && d->m.isApprox(d->m.transpose(), 1e-12))
      return std::max<Index>(d->m.rows() - 1, 0);
  }
  return std::nullopt;
}

RowScaledOperator::RowScaledOperator(std::shared_ptr<const LinearOperator> op, Vector weights)
    : op_(std::move(op)), weights_(std::move(weights)) {
  check_length("RowScaledOperator weights", op_->rows(), weights_.size());
}

RowScaledOperator::RowScaledOperator(std::shared_ptr<const LinearOperator> op, double weight)
    : op_(std::move(op)), weight_(weight) {}

Vector RowScaledOperator::apply(const Vector& x) const {
  Vector y = op_->apply(x);
  if (weights_.size() > 0) return y.cwiseProduct(weights_);
  return weight_ * y;
}

Vector RowScaledOperator::apply_transpose(const Vector& y) const {
  if (weights_.size() > 0) return op_->apply_transpose(y.cwiseProduct(weights_));
  return op_->apply_transpose(weight_ * y);
}

StackedOperator::StackedOperator(std::vector<std::shared_ptr<const LinearOperator>> blocks)
    : blocks_(std::move(blocks)) {
  if (blocks_.empty()) throw InvalidArgument("StackedOperator needs at least one block");
  cols_ = blocks_.front()->cols();
  for (const auto& b : blocks_) {
    check_length("StackedOperator block columns", cols_, b->cols());
    rows_ += b->rows();
  }
}

Vector StackedOperator::apply(const Vector& x) const {
  Vector y(rows_);
  Index offset = 0;
  for (const auto& b : blocks_) {
    y.segment(offset, b->rows()) = b->apply(x);
    offset += b->rows();
  }
  return y;
}

Vector StackedOperator::apply_transpose(const Vector& y) const {
  check_length("StackedOperator::apply_transpose", rows_, y.size());
  Vector x = Vector::Zero(cols_);
  Index offset = 0;
  for (const auto& b : blocks_) {
    x += b->apply_transpose(y.segment(offset, b->rows()));
    offset += b->rows();
  }
  return x;
}

CholeskyFactor::CholeskyFactor(Index n, Index bandwidth, std::vector<double> rows_band)
    : n_(n), p_(bandwidth), band_(std::move(rows_band)) {}

double CholeskyFactor::entry(Index i, Index j) const {
  if (j > i || i - j > p_) return 0.0;
  return band_[i * (p_ + 1) + p_ - (i - j)];
}

Matrix CholeskyFactor::to_dense() const {
  Matrix L = Matrix::Zero(n_, n_);
  for (Index i = 0; i < n_; ++i)
    for (Index j = std::max<Index>(0, i - p_); j <= i; ++j) L(i, j) = entry(i, j);
  return L;
}

Vector CholeskyFactor::multiply_lower(const Vector& z) const {
  check_length("CholeskyFactor::multiply_lower", n_, z.size());
  Vector y(n_);
  for (Index i = 0; i < n_; ++i) {
    const double* row = &band_[i * (p_ + 1) + p_ - i];
    double acc = 0.0;
    for (Index k = std::max<Index>(0, i - p_); k <= i; ++k) acc += row[k] * z[k];
    y[i] = acc;
  }
  return y;
}

Vector CholeskyFactor::multiply_upper(const Vector& z) const {
  check_length("CholeskyFactor::multiply_upper", n_, z.size());
  Vector y = Vector::Zero(n_);
  for (Index i = 0; i < n_; ++i) {
    const double* row = &band_[i * (p_ + 1) + p_ - i];
    const double zi = z[i];
    for (Index k = std::max<Index>(0, i - p_); k <= i; ++k) y[k] += row[k] * zi;
  }
  return y;
}

Vector CholeskyFactor::solve_lower(const Vector& b) const {
  check_length("CholeskyFactor::solve_lower", n_, b.size());
  Vector y(n_);
  for (Index i = 0; i < n_; ++i) {
    const double* row = &band_[i * (p_ + 1) + p_ - i];
    double acc = b[i];
    for (Index k = std::max<Index>(0, i - p_); k < i; ++k) acc -= row[k] * y[k];
    y[i] = acc / row[i];
  }
  return y;
}

Vector CholeskyFactor::solve_upper(const Vector& b) const {
  check_length("CholeskyFactor::solve_upper", n_, b.size());
  Vector x = b;
  for (Index i = n_ - 1; i >= 0; --i) {
    const double* row = &band_[i * (p_ + 1) + p_ - i];
    x[i] /= row[i];
    const double xi = x[i];
    for (Index k = std::max<Index>(0, i - p_); k < i; ++k) x[k] -= row[k] * xi;
  }
  return x;
}

Vector CholeskyFactor::solve(const Vector& b) const { return solve_upper(solve_lower(b)); }

double CholeskyFactor::log_determinant() const {
  double s = 0.0;
  for (Index i = 0; i < n_; ++i) s += std::log(entry(i, i));
  return 2.0 * s;
}

namespace {

template <class EntryFn>
CholeskyFactor banded_cholesky(Index n, Index p, EntryFn&& a) {
  const Index w = p + 1;
  std::vector<double> band(static_cast<std::size_t>(n * w), 0.0);
  auto L = [&](Index i, Index j) -> double& { return band[i * w + p - (i - j)]; };
  for (Index i = 0; i < n; ++i) {
    const Index start = std::max<Index>(0, i - p);
    for (Index j = start; j <= i; ++j) {
      double s = a(i, j);
      const Index kmin = std::max(start, j - p);
      const double* ri = &band[i * w + p - i];
      const double* rj = &band[j * w + p - j];
      for (Index k = kmin; k < j; ++k) s -= ri[k] * rj[k];
      if (j < i) {
        L(i, j) = s / L(j, j);
      } else {
        if (!(s > 0.0)) throw FactorizationError(i);
        L(i, i) = std::sqrt(s);
      }
    }
  }
  return CholeskyFactor(n, p, std::move(band));
}

}  // namespace

CholeskyFactor cholesky_factor(const MatrixOperator& m) {
  if (m.rows() != m.cols()) throw DimensionError("cholesky_factor: square matrix", m.rows(), m.cols());
  if (auto p = m.symmetric_bandwidth()) {
    return banded_cholesky(m.rows(), std::min(*p, m.rows() - 1),
                           [&](Index i, Index j) { return m.entry(i, j); });
  }
  return cholesky_factor(m.to_dense());
}

CholeskyFactor cholesky_factor(const Matrix& m) {
  if (m.rows() != m.cols()) throw DimensionError("cholesky_factor: square matrix", m.rows(), m.cols());
  if (!m.isApprox(m.transpose(), 1e-12) && m.size() > 0)
    throw InvalidArgument("cholesky_factor: matrix is not symmetric");
  const Index n = m.rows();
  return banded_cholesky(n, std::max<Index>(n - 1, 0), [&](Index i, Index j) { return m(i, j); });
}

CglsResult cgls_solve(const LinearOperator& op, const Vector& rhs, int max_iter, double tol,
                      const Vector* initial) {
  check_length("cgls_solve rhs", op.rows(), rhs.size());
  if (!(tol > 0.0)) throw InvalidArgument("cgls_solve: tol must be positive");
  CglsResult out;
  const Vector atb = op.apply_transpose(rhs);
  const double atb_norm = atb.norm();
  if (initial) {
    check_length("cgls_solve initial guess", op.cols(), initial->size());
    out.x = *initial;
  } else {
    out.x = Vector::Zero(op.cols());
  }
  if (atb_norm == 0.0) {
    out.x.setZero();
    out.converged = true;
    return out;
  }
  Vector r = initial ? Vector(rhs - op.apply(out.x)) : rhs;
  Vector s = initial ? op.apply_transpose(r) : atb;
  Vector p = s;
  double gamma = s.squaredNorm();
  out.relative_residual = std::sqrt(gamma) / atb_norm;
  if (out.relative_residual <= tol) {
    out.converged = true;
    return out;
  }
  for (int k = 0; k < max_iter; ++k) {
    const Vector q = op.apply(p);
    const double qq = q.squaredNorm();
    if (qq == 0.0) break;
    const double alpha = gamma / qq;
    out.x += alpha * p;
    r -= alpha * q;
    s = op.apply_transpose(r);
    const double gamma_new = s.squaredNorm();
    out.iterations = k + 1;
    out.relative_residual = std::sqrt(gamma_new) / atb_norm;
    if (out.relative_residual <= tol) {
      out.converged = true;
      break;
    }
    p = s + (gamma_new / gamma) * p;
    gamma = gamma_new;
  }
  return out;
}

std::optional<Index> exact_square_root(Index n) {
  if (n < 0) return std::nullopt;
  auto N = static_cast<Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (N * N == n) return N;
  return std::nullopt;
}

MatrixOperator gmrf_precision(Index n, double d, int dims) {
  if (!(d > 0.0)) throw InvalidArgument("gmrf_precision: precision d must be positive");
  if (n < 1) throw InvalidArgument("gmrf_precision: n must be at least 1");
  auto laplacian = [](Index m, double scale) {
    Matrix band(3, m);
    band.row(0).setConstant(-scale);
    band.row(1).setConstant(2.0 * scale);
    band.row(2).setConstant(-scale);
    return MatrixOperator::banded(m, m, 1, 1, std::move(band), true);
  };
  if (dims == 1) return laplacian(n, d);
  if (dims != 2) throw InvalidArgument("gmrf_precision: dims must be 1 or 2");
  const auto N = exact_square_root(n);
  if (!N) throw InvalidArgument("gmrf_precision: 2-D field needs a square number of elements, got " + std::to_string(n));
  return MatrixOperator::kronecker_sum(laplacian(*N, 1.0), d);
}

MatrixOperator difference_matrix(Index n) {
  if (n < 1) throw InvalidArgument("difference_matrix: n must be at least 1");
  Matrix band(2, n + 1);
  band.row(0).setConstant(-1.0);  // offset -1
  band.row(1).setConstant(1.0);   // offset 0
  return MatrixOperator::banded(n + 1, n, 1, 0, std::move(band));
}

std::pair<MatrixOperator, MatrixOperator> difference_operators_2d(Index N) {
  MatrixOperator D = difference_matrix(N);
  MatrixOperator I = MatrixOperator::identity(N);
  return {MatrixOperator::kronecker(I, D), MatrixOperator::kronecker(D, I)};
}

Matrix read_csv_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open CSV file " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str()) throw Error("non-numeric CSV cell '" + cell + "' in " + path.string());
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error("ragged CSV row " + std::to_string(rows.size() + 1) + " in " + path.string());
    rows.push_back(std::move(row));
  }
  const Index r = static_cast<Index>(rows.size());
  const Index c = r ? static_cast<Index>(rows.front().size()) : 0;
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = rows[i][j];
  return m;
}

void write_csv_matrix(const std::filesystem::path& path, const Matrix& m) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw Error("cannot write CSV file " + path.string());
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) std::fprintf(f, j ? ",%.17g" : "%.17g", m(i, j));
    std::fputc('\n', f);
  }
  if (std::fclose(f) != 0) throw Error("failed writing CSV file " + path.string());
}

}  // namespace invuq
