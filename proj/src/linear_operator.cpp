#include "mixkry/linear_operator.hpp"

#include "mixkry/errors.hpp"

#include <string>
#include <utility>

namespace mixkry {

namespace {

void require_length(Index got, Index want, const char* what) {
  if (got != want) {
    throw ArgumentError(std::string(what) + ": expected length " +
                        std::to_string(want) + ", got " + std::to_string(got));
  }
}

}  // namespace

LinearOperator::LinearOperator(Index rows, Index cols, Map apply,
                               Map apply_transpose)
    : rows_(rows),
      cols_(cols),
      apply_(std::move(apply)),
      apply_transpose_(std::move(apply_transpose)) {
  if (rows <= 0 || cols <= 0) {
    throw ArgumentError("LinearOperator: dimensions must be positive");
  }
  if (!apply_) {
    throw ArgumentError("LinearOperator: apply map is required");
  }
}

void LinearOperator::apply(const Vector& x, Vector& y) const {
  require_length(x.size(), cols_, "LinearOperator::apply");
  y.resize(rows_);
  apply_(x, y);
}

Vector LinearOperator::apply(const Vector& x) const {
  Vector y(rows_);
  apply(x, y);
  return y;
}

void LinearOperator::apply_transpose(const Vector& y, Vector& x) const {
  if (!apply_transpose_) {
    throw ArgumentError("LinearOperator: no transpose map available");
  }
  require_length(y.size(), rows_, "LinearOperator::apply_transpose");
  x.resize(cols_);
  apply_transpose_(y, x);
}

Vector LinearOperator::apply_transpose(const Vector& y) const {
  Vector x(cols_);
  apply_transpose(y, x);
  return x;
}

LinearOperator LinearOperator::transpose() const {
  if (!apply_transpose_) {
    throw ArgumentError("LinearOperator: no transpose map available");
  }
  LinearOperator t(cols_, rows_, apply_transpose_, apply_);
  t.zero_ = zero_;
  return t;
}

LinearOperator make_dense_operator(std::shared_ptr<const Matrix> matrix) {
  const Index rows = matrix->rows();
  const Index cols = matrix->cols();
  return LinearOperator(
      rows, cols,
      [matrix](const Vector& x, Vector& y) { y.noalias() = *matrix * x; },
      [matrix](const Vector& y, Vector& x) {
        x.noalias() = matrix->transpose() * y;
      });
}

LinearOperator make_dense_operator(Matrix matrix) {
  return make_dense_operator(std::make_shared<const Matrix>(std::move(matrix)));
}

LinearOperator make_symmetric_operator(std::shared_ptr<const Matrix> matrix) {
  if (matrix->rows() != matrix->cols()) {
    throw ArgumentError("make_symmetric_operator: matrix must be square");
  }
  auto map = [matrix](const Vector& x, Vector& y) { y.noalias() = *matrix * x; };
  return LinearOperator(matrix->rows(), matrix->cols(), map, map);
}

LinearOperator make_sparse_operator(std::shared_ptr<const SparseMatrix> matrix) {
  return LinearOperator(
      matrix->rows(), matrix->cols(),
      [matrix](const Vector& x, Vector& y) { y.noalias() = *matrix * x; },
      [matrix](const Vector& y, Vector& x) {
        x.noalias() = matrix->transpose() * y;
      });
}

LinearOperator make_sparse_operator(SparseMatrix matrix) {
  return make_sparse_operator(
      std::make_shared<const SparseMatrix>(std::move(matrix)));
}

LinearOperator make_diagonal_operator(Vector diagonal) {
  auto d = std::make_shared<const Vector>(std::move(diagonal));
  auto map = [d](const Vector& x, Vector& y) { y = d->cwiseProduct(x); };
  return LinearOperator(d->size(), d->size(), map, map);
}

LinearOperator make_identity_operator(Index n, double scale) {
  auto map = [scale](const Vector& x, Vector& y) { y = scale * x; };
  return LinearOperator(n, n, map, map);
}

LinearOperator make_zero_operator(Index rows, Index cols) {
  LinearOperator op(
      rows, cols, [](const Vector&, Vector& y) { y.setZero(); },
      [](const Vector&, Vector& x) { x.setZero(); });
  op.mark_zero();
  return op;
}

LinearOperator make_combination(double a, LinearOperator lhs, double b,
                                LinearOperator rhs) {
  if (lhs.rows() != rhs.rows() || lhs.cols() != rhs.cols()) {
    throw ArgumentError("make_combination: operator dimensions differ");
  }
  const Index rows = lhs.rows();
  const Index cols = lhs.cols();
  const bool both_t = lhs.has_transpose() && rhs.has_transpose();
  LinearOperator::Map fwd = [a, b, lhs, rhs](const Vector& x, Vector& y) {
    Vector tmp(y.size());
    lhs.apply(x, y);
    rhs.apply(x, tmp);
    y = a * y + b * tmp;
  };
  LinearOperator::Map adj;
  if (both_t) {
    adj = [a, b, lhs, rhs](const Vector& y, Vector& x) {
      Vector tmp(x.size());
      lhs.apply_transpose(y, x);
      rhs.apply_transpose(y, tmp);
      x = a * x + b * tmp;
    };
  }
  return LinearOperator(rows, cols, std::move(fwd), std::move(adj));
}

Matrix to_dense(const LinearOperator& op) {
  Matrix dense(op.rows(), op.cols());
  Vector e = Vector::Zero(op.cols());
  Vector col(op.rows());
  for (Index j = 0; j < op.cols(); ++j) {
    e[j] = 1.0;
    op.apply(e, col);
    dense.col(j) = col;
    e[j] = 0.0;
  }
  return dense;
}

}  // namespace mixkry
