#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>

namespace mixkry {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Matrix-free linear map y = Op x with declared dimensions.
///
/// The map is held by value through a type-erased callable, so copies are
/// cheap and share the underlying data. Operators are immutable once built;
/// `apply` may be called concurrently from several threads.
class LinearOperator {
 public:
  /// Writes Op x into y. y is already sized to rows().
  using Map = std::function<void(const Vector& x, Vector& y)>;

  LinearOperator() = default;
  LinearOperator(Index rows, Index cols, Map apply, Map apply_transpose = {});

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  bool has_transpose() const { return static_cast<bool>(apply_transpose_); }
  bool is_zero() const { return zero_; }

  void apply(const Vector& x, Vector& y) const;
  Vector apply(const Vector& x) const;
  Vector operator*(const Vector& x) const { return apply(x); }

  void apply_transpose(const Vector& y, Vector& x) const;
  Vector apply_transpose(const Vector& y) const;

  /// The adjoint operator. Throws if no transpose map was supplied.
  LinearOperator transpose() const;

  /// Marks the operator as identically zero so callers can skip work.
  LinearOperator& mark_zero() {
    zero_ = true;
    return *this;
  }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  Map apply_;
  Map apply_transpose_;
  bool zero_ = false;
};

LinearOperator make_dense_operator(std::shared_ptr<const Matrix> matrix);
LinearOperator make_dense_operator(Matrix matrix);
/// Symmetric dense operator; the transpose reuses the forward map.
LinearOperator make_symmetric_operator(std::shared_ptr<const Matrix> matrix);
LinearOperator make_sparse_operator(std::shared_ptr<const SparseMatrix> matrix);
LinearOperator make_sparse_operator(SparseMatrix matrix);
LinearOperator make_diagonal_operator(Vector diagonal);
LinearOperator make_identity_operator(Index n, double scale = 1.0);
LinearOperator make_zero_operator(Index rows, Index cols);

/// a * lhs + b * rhs, evaluated lazily.
LinearOperator make_combination(double a, LinearOperator lhs, double b,
                                LinearOperator rhs);

/// Materializes the operator column by column. Intended for small problems
/// and test oracles.
Matrix to_dense(const LinearOperator& op);

}  // namespace mixkry
