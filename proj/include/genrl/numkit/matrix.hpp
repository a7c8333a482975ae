#pragma once

#include <cstddef>
#include <vector>

namespace genrl::numkit {

// Dense row-major matrix of doubles. Value semantics, no views.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double> row_copy(std::size_t i) const;
  void set_row(std::size_t i, const std::vector<double>& values);

  bool all_finite() const;

  bool operator==(const Matrix& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix transpose(const Matrix& a);

// c = a * b, shapes (n x k) (k x m) -> (n x m).
Matrix matmul(const Matrix& a, const Matrix& b);

// Squared Euclidean distances between rows: out(i, j) = |a_i - b_j|^2.
// Computed as an explicit sum of squared differences so identical rows give
// exactly zero; symmetric inputs give a symmetric result up to transposition.
Matrix pairwise_sq_dists(const Matrix& a, const Matrix& b);

// Stacks b below a (column counts must match).
Matrix vstack(const Matrix& a, const Matrix& b);

// Gathers the given rows of a into a new matrix.
Matrix take_rows(const Matrix& a, const std::vector<std::size_t>& idx);

}  // namespace genrl::numkit
