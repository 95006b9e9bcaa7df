#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string_view>
#include <vector>

namespace neurocap {

/// Dense row-major matrix of doubles.
///
/// A row vector is a 1 x n matrix; a batch of samples is stored one sample
/// per row. Every public operation taking a Matrix rejects non-finite
/// entries with NumericError.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }

  bool all_finite() const noexcept;
  Matrix transposed() const;
  /// Copies rows [begin, begin + count).
  Matrix row_block(std::size_t begin, std::size_t count) const;
  /// Gathers the listed rows, in order.
  Matrix select_rows(std::span<const std::size_t> indices) const;

  /// Bitwise equality of shape and payload.
  friend bool operator==(const Matrix& a, const Matrix& b) noexcept;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Throws NumericError naming `what` if any entry is NaN or infinite.
void require_finite(const Matrix& m, std::string_view what);
/// Throws ShapeError unless `a` and `b` have the same shape.
void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what);

Matrix matmul(const Matrix& a, const Matrix& b);
/// aᵀ · b
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a · bᵀ
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// x · w + b, with the 1 x k row `b` broadcast over the rows of x.
Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b);

Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix scaled(const Matrix& a, double s);
/// Adds the 1 x cols row `b` to every row of `a`.
Matrix add_row(const Matrix& a, const Matrix& b);
/// 1 x cols row of column sums.
Matrix column_sums(const Matrix& a);
/// 1 x cols row of column means.
Matrix column_means(const Matrix& a);

double sum(const Matrix& a);
double squared_norm(const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

/// Solves A·X = B for symmetric positive-definite A (Cholesky).
/// Throws SolverError when A is not numerically positive definite.
Matrix solve_spd(const Matrix& a, const Matrix& b);

}  // namespace neurocap
