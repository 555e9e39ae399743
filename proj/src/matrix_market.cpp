#include "mixkry/matrix_market.hpp"

#include "mixkry/errors.hpp"

#include <unsupported/Eigen/SparseExtra>

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace mixkry::mm {

namespace {

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  return in;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << std::setprecision(std::numeric_limits<double>::max_digits10);
  return out;
}

// Skips the banner and comment lines; returns the banner.
std::string read_header(std::istream& in, std::string& size_line) {
  std::string banner;
  if (!std::getline(in, banner) || banner.rfind("%%MatrixMarket", 0) != 0) {
    throw IoError("missing %%MatrixMarket banner");
  }
  std::transform(banner.begin(), banner.end(), banner.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  while (std::getline(in, size_line)) {
    if (!size_line.empty() && size_line[0] != '%') {
      return banner;
    }
  }
  throw IoError("missing size line");
}

}  // namespace

void write_dense(const std::filesystem::path& path, const Matrix& matrix) {
  auto out = open_for_write(path);
  out << "%%MatrixMarket matrix array real general\n";
  out << matrix.rows() << ' ' << matrix.cols() << '\n';
  for (Index j = 0; j < matrix.cols(); ++j) {
    for (Index i = 0; i < matrix.rows(); ++i) {
      out << matrix(i, j) << '\n';
    }
  }
  if (!out) {
    throw IoError("write failed for '" + path.string() + "'");
  }
}

Matrix read_dense(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  std::string size_line;
  const std::string banner = read_header(in, size_line);
  if (banner.find("array") == std::string::npos ||
      banner.find("real") == std::string::npos) {
    throw IoError("'" + path.string() + "' is not a real array file");
  }
  const bool symmetric = banner.find("symmetric") != std::string::npos;
  std::istringstream sizes(size_line);
  Index rows = 0;
  Index cols = 0;
  if (!(sizes >> rows >> cols) || rows <= 0 || cols <= 0) {
    throw IoError("bad size line in '" + path.string() + "'");
  }
  Matrix m = Matrix::Zero(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = symmetric ? j : 0; i < rows; ++i) {
      double v = 0.0;
      if (!(in >> v)) {
        throw IoError("truncated data in '" + path.string() + "'");
      }
      m(i, j) = v;
      if (symmetric) m(j, i) = v;
    }
  }
  return m;
}

void write_vector(const std::filesystem::path& path, const Vector& vector) {
  write_dense(path, Matrix(vector));
}

Vector read_vector(const std::filesystem::path& path) {
  const Matrix m = read_dense(path);
  if (m.cols() == 1) return m.col(0);
  if (m.rows() == 1) return m.row(0).transpose();
  throw IoError("'" + path.string() + "' is not a vector");
}

void write_sparse(const std::filesystem::path& path, const SparseMatrix& matrix) {
  if (!Eigen::saveMarket(matrix, path.string())) {
    throw IoError("cannot write '" + path.string() + "'");
  }
}

SparseMatrix read_sparse(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  SparseMatrix m;
  if (!Eigen::loadMarket(m, path.string())) {
    throw IoError("cannot parse '" + path.string() + "' as a coordinate file");
  }
  return m;
}

Matrix read_samples(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("sample path '" + path.string() + "' does not exist");
  }
  if (!std::filesystem::is_directory(path)) {
    return read_dense(path);
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".mtx") {
      files.push_back(entry.path());
    }
  }
  if (files.empty()) {
    throw IoError("no .mtx sample files in '" + path.string() + "'");
  }
  std::sort(files.begin(), files.end());
  std::vector<Vector> cols;
  cols.reserve(files.size());
  for (const auto& f : files) {
    cols.push_back(read_vector(f));
  }
  Matrix samples(cols.front().size(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (cols[j].size() != samples.rows()) {
      throw IoError("sample files differ in length");
    }
    samples.col(static_cast<Index>(j)) = cols[j];
  }
  return samples;
}

}  // namespace mixkry::mm
