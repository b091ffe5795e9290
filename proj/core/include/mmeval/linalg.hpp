#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mmeval {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const noexcept { return data_; }

  Matrix transpose() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix multiply(const Matrix& a, const Matrix& b);

struct JacobiOptions {
  double symmetry_tolerance = 1e-9;  // relative to max |m_ij|
  double off_diagonal_tolerance = 1e-12;  // off-diagonal Frobenius norm, relative to ||M||_F
  int max_sweeps = 100;
};

// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, in no
// particular order. Throws NotSymmetric or NumericalFailure (sweep cap hit).
std::vector<double> symmetric_eigenvalues(const Matrix& m, const JacobiOptions& options = {});

// Solves A x = b for symmetric positive-definite A via Cholesky. Throws
// SingularSystem when a pivot is not safely positive.
std::vector<double> solve_spd(const Matrix& a, std::span<const double> b);

}  // namespace mmeval
