#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <variant>
#include <vector>

#include "invuq/types.hpp"

namespace invuq {

/// Abstract linear map with a transpose. All implementations are immutable
/// after construction and safe to apply concurrently.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual Vector apply(const Vector& x) const = 0;
  virtual Vector apply_transpose(const Vector& y) const = 0;
};

class MatrixOperator;

/// Dense rows x cols storage.
struct DenseRep {
  Matrix m;
};

/// General banded storage: band(k + lower, i) = A(i, i + k) for
/// k in [-lower, upper]. Entries falling outside the matrix are zero.
struct BandedRep {
  Index rows = 0;
  Index cols = 0;
  Index lower = 0;
  Index upper = 0;
  Matrix band;
  bool symmetric = false;
};

/// scale * (I_N (x) L + L (x) I_N) acting on column-stacked N x N arrays.
struct KroneckerSumRep {
  std::shared_ptr<const MatrixOperator> factor;
  double scale = 1.0;
};

/// A (x) B acting on column-stacked arrays: (A (x) B) vec(X) = vec(B X A^T).
struct KroneckerRep {
  std::shared_ptr<const MatrixOperator> outer;
  std::shared_ptr<const MatrixOperator> inner;
};

/// Structured matrix. Kronecker forms are applied without materialization.
class MatrixOperator final : public LinearOperator {
 public:
  using Representation =
      std::variant<DenseRep, BandedRep, KroneckerSumRep, KroneckerRep>;

  // Largest N for which Kronecker-structured operators are materialized.
  static constexpr Index kMaxKroneckerDenseSide = 64;

  static MatrixOperator dense(Matrix m);
  static MatrixOperator identity(Index n);
  /// Banded operator; see BandedRep for the layout of `band`.
  static MatrixOperator banded(Index rows, Index cols, Index lower, Index upper,
                               Matrix band, bool symmetric = false);
  static MatrixOperator kronecker_sum(MatrixOperator factor, double scale);
  static MatrixOperator kronecker(MatrixOperator outer, MatrixOperator inner);

  Index rows() const override;
  Index cols() const override;
  Vector apply(const Vector& x) const override;
  Vector apply_transpose(const Vector& y) const override;

  Matrix to_dense() const;
  MatrixOperator scaled(double factor) const;

  /// Entry (i, j) without materializing.
  double entry(Index i, Index j) const;

  /// Lower half-bandwidth of the symmetric pattern, if the operator is square
  /// and banded (directly or via a Kronecker sum of a banded factor).
  std::optional<Index> symmetric_bandwidth() const;

  const Representation& representation() const { return rep_; }

 private:
  explicit MatrixOperator(Representation rep) : rep_(std::move(rep)) {}

  Representation rep_;
};

/// diag(weights) * op
class RowScaledOperator final : public LinearOperator {
 public:
  RowScaledOperator(std::shared_ptr<const LinearOperator> op, Vector weights);
  RowScaledOperator(std::shared_ptr<const LinearOperator> op, double weight);

  Index rows() const override { return op_->rows(); }
  Index cols() const override { return op_->cols(); }
  Vector apply(const Vector& x) const override;
  Vector apply_transpose(const Vector& y) const override;

 private:
  std::shared_ptr<const LinearOperator> op_;
  Vector weights_;
  double weight_ = 1.0;
};

/// Vertical stack [B_1; B_2; ...] of operators sharing a column count.
class StackedOperator final : public LinearOperator {
 public:
  explicit StackedOperator(std::vector<std::shared_ptr<const LinearOperator>> blocks);

  Index rows() const override { return rows_; }
  Index cols() const override { return cols_; }
  Vector apply(const Vector& x) const override;
  Vector apply_transpose(const Vector& y) const override;

  const std::vector<std::shared_ptr<const LinearOperator>>& blocks() const {
    return blocks_;
  }

 private:
  std::vector<std::shared_ptr<const LinearOperator>> blocks_;
  Index rows_ = 0;
  Index cols_ = 0;
};

/// Lower-triangular Cholesky factor stored in band form; a dense factor is the
/// special case bandwidth = n - 1.
class CholeskyFactor {
 public:
  CholeskyFactor(Index n, Index bandwidth, std::vector<double> rows_band);

  Index size() const { return n_; }
  Index bandwidth() const { return p_; }

  double entry(Index i, Index j) const;
  Matrix to_dense() const;

  Vector multiply_lower(const Vector& z) const;   // L z
  Vector multiply_upper(const Vector& z) const;   // L^T z
  Vector solve_lower(const Vector& b) const;      // L^{-1} b
  Vector solve_upper(const Vector& b) const;      // L^{-T} b
  Vector solve(const Vector& b) const;            // (L L^T)^{-1} b
  double log_determinant() const;                 // log det(L L^T)

 private:
  Index n_;
  Index p_;
  // Row-major n x (p + 1): band_[i * (p + 1) + p - (i - j)] = L(i, j).
  std::vector<double> band_;
};

CholeskyFactor cholesky_factor(const MatrixOperator& m);
CholeskyFactor cholesky_factor(const Matrix& m);

struct CglsResult {
  Vector x;
  int iterations = 0;
  bool converged = false;
  double relative_residual = 0.0;  // ||A^T(b - Ax)|| / ||A^T b||
};

/// Conjugate gradient least squares for min ||A x - b||_2, stopping when the
/// relative normal-equation residual falls below `tol`.
CglsResult cgls_solve(const LinearOperator& op, const Vector& rhs,
                      int max_iter = 1000, double tol = 1e-6,
                      const Vector* initial = nullptr);

/// d * L_n (1-D, tridiagonal) or d * (I (x) L_N + L_N (x) I) with n = N^2.
MatrixOperator gmrf_precision(Index n, double d, int dims);

/// (n+1) x n first-order difference matrix with zero boundary values.
MatrixOperator difference_matrix(Index n);

/// Column-direction (I (x) D_N) and row-direction (D_N (x) I) differences of a
/// column-stacked N x N image.
std::pair<MatrixOperator, MatrixOperator> difference_operators_2d(Index N);

/// Integer side length N with N*N == n, or nullopt.
std::optional<Index> exact_square_root(Index n);

Matrix read_csv_matrix(const std::filesystem::path& path);
void write_csv_matrix(const std::filesystem::path& path, const Matrix& m);

}  // namespace invuq
