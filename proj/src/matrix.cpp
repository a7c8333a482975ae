#include "genrl/numkit/matrix.hpp"

#include <cmath>

#include "genrl/error.hpp"

namespace genrl::numkit {

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return Matrix();
  Matrix m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i].size() == m.cols_, "from_rows: ragged input");
    for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<double> Matrix::row_copy(std::size_t i) const {
  return std::vector<double>(row(i), row(i) + cols_);
}

void Matrix::set_row(std::size_t i, const std::vector<double>& values) {
  require(values.size() == cols_, "set_row: length mismatch");
  for (std::size_t j = 0; j < cols_; ++j) (*this)(i, j) = values[j];
}

bool Matrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* brow = b.row(k);
      double* orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "pairwise_sq_dists: column counts differ");
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* bj = b.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) {
        const double d = ai[k] - bj[k];
        acc += d * d;
      }
      out(i, j) = acc;
    }
  }
  return out;
}

Matrix vstack(const Matrix& a, const Matrix& b) {
  if (a.rows() == 0) return b;
  if (b.rows() == 0) return a;
  require(a.cols() == b.cols(), "vstack: column counts differ");
  Matrix out(a.rows() + b.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) out(a.rows() + i, j) = b(i, j);
  return out;
}

Matrix take_rows(const Matrix& a, const std::vector<std::size_t>& idx) {
  Matrix out(idx.size(), a.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    require(idx[i] < a.rows(), "take_rows: index out of range");
    const double* src = a.row(idx[i]);
    double* dst = out.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

}  // namespace genrl::numkit
