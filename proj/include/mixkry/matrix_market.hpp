#pragma once

#include "mixkry/linear_operator.hpp"

#include <filesystem>

namespace mixkry::mm {

/// Dense matrix in MatrixMarket array format (column-major, real general).
void write_dense(const std::filesystem::path& path, const Matrix& matrix);
Matrix read_dense(const std::filesystem::path& path);

void write_vector(const std::filesystem::path& path, const Vector& vector);
/// Reads an n x 1 (or 1 x n) array file.
Vector read_vector(const std::filesystem::path& path);

/// Sparse matrix in MatrixMarket coordinate format.
void write_sparse(const std::filesystem::path& path, const SparseMatrix& matrix);
SparseMatrix read_sparse(const std::filesystem::path& path);

/// Training samples as columns. `path` is either a single array file whose
/// columns are samples, or a directory of per-sample vector files (read in
/// lexicographic filename order).
Matrix read_samples(const std::filesystem::path& path);

}  // namespace mixkry::mm
