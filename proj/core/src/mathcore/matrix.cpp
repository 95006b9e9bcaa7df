#include "neurocap/mathcore/matrix.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <limits>
#include <string>

#include "neurocap/errors.hpp"

namespace neurocap {
namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMajor>;
using Map = Eigen::Map<RowMajor>;

MapC view(const Matrix& m) { return MapC(m.values().data(), m.rows(), m.cols()); }
Map view(Matrix& m) { return Map(m.values().data(), m.rows(), m.cols()); }

std::string shape_str(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_product(std::size_t inner_a, std::size_t inner_b, const Matrix& a,
                     const Matrix& b, const char* op) {
  if (inner_a != inner_b) {
    throw ShapeError(std::string(op) + ": cannot multiply " + shape_str(a) + " by " +
                     shape_str(b));
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Matrix: payload has " + std::to_string(data_.size()) +
                     " values, expected " + std::to_string(rows * cols));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::row_vector(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

bool Matrix::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::row_block(std::size_t begin, std::size_t count) const {
  if (begin + count > rows_) throw ShapeError("row_block: range exceeds matrix rows");
  return Matrix(count, cols_,
                std::vector<double>(data_.begin() + static_cast<std::ptrdiff_t>(begin * cols_),
                                    data_.begin() +
                                        static_cast<std::ptrdiff_t>((begin + count) * cols_)));
}

Matrix Matrix::select_rows(std::span<const std::size_t> indices) const {
  Matrix out(indices.size(), cols_);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows_) throw ShapeError("select_rows: row index out of range");
    std::copy_n(row(indices[i]).begin(), cols_, out.row(i).begin());
  }
  return out;
}

bool operator==(const Matrix& a, const Matrix& b) noexcept {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
  return std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(), [](double x, double y) {
    return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y);
  });
}

void require_finite(const Matrix& m, std::string_view what) {
  if (!m.all_finite()) {
    throw NumericError(std::string(what) + ": non-finite value in input");
  }
}

void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a) + " vs " +
                     shape_str(b));
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_product(a.cols(), b.rows(), a, b, "matmul");
  require_finite(a, "matmul");
  require_finite(b, "matmul");
  Matrix out(a.rows(), b.cols());
  if (a.cols() > 0) view(out).noalias() = view(a) * view(b);
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  require_product(a.rows(), b.rows(), a, b, "matmul_tn");
  require_finite(a, "matmul_tn");
  require_finite(b, "matmul_tn");
  Matrix out(a.cols(), b.cols());
  if (a.rows() > 0) view(out).noalias() = view(a).transpose() * view(b);
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  require_product(a.cols(), b.cols(), a, b, "matmul_nt");
  require_finite(a, "matmul_nt");
  require_finite(b, "matmul_nt");
  Matrix out(a.rows(), b.rows());
  if (a.cols() > 0) view(out).noalias() = view(a) * view(b).transpose();
  return out;
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw ShapeError("affine: bias must be 1x" + std::to_string(w.cols()) + ", got " +
                     shape_str(b));
  }
  require_finite(b, "affine");
  Matrix out = matmul(x, w);
  return add_row(out, b);
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "add");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  require_finite(out, "add");
  return out;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "subtract");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  require_finite(out, "subtract");
  return out;
}

Matrix hadamard(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "hadamard");
  Matrix out = a;
  auto o = out.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  require_finite(out, "hadamard");
  return out;
}

Matrix scaled(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.values()) v *= s;
  require_finite(out, "scaled");
  return out;
}

Matrix add_row(const Matrix& a, const Matrix& b) {
  if (b.rows() != 1 || b.cols() != a.cols()) {
    throw ShapeError("add_row: expected 1x" + std::to_string(a.cols()) + " row, got " +
                     shape_str(b));
  }
  Matrix out = a;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += b(0, c);
  }
  require_finite(out, "add_row");
  return out;
}

Matrix column_sums(const Matrix& a) {
  Matrix out(1, a.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out(0, c) += row[c];
  }
  return out;
}

Matrix column_means(const Matrix& a) {
  Matrix out = column_sums(a);
  if (a.rows() > 0) out = scaled(out, 1.0 / static_cast<double>(a.rows()));
  return out;
}

double sum(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v;
  return s;
}

double squared_norm(const Matrix& a) {
  double s = 0.0;
  for (double v : a.values()) s += v * v;
  return s;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(squared_norm(a)); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto av = a.values();
  auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
  return m;
}

Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (a.rows() != a.cols()) throw ShapeError("solve_spd: matrix is not square");
  if (b.rows() != a.rows()) {
    throw ShapeError("solve_spd: right-hand side has " + std::to_string(b.rows()) +
                     " rows, expected " + std::to_string(a.rows()));
  }
  require_finite(a, "solve_spd");
  require_finite(b, "solve_spd");
  const std::size_t n = a.rows();
  if (n == 0) return Matrix(0, b.cols());

  Eigen::MatrixXd dense = view(a);
  Eigen::LLT<Eigen::MatrixXd> llt(dense);
  if (llt.info() != Eigen::Success) {
    throw SolverError("solve_spd: matrix is not positive definite");
  }
  // A positive pivot can still be round-off on an exactly singular system.
  const Eigen::MatrixXd l = llt.matrixL();
  const double max_diag = dense.diagonal().cwiseAbs().maxCoeff();
  const double min_pivot = l.diagonal().array().square().minCoeff();
  if (min_pivot <= static_cast<double>(n) * std::numeric_limits<double>::epsilon() * max_diag) {
    throw SolverError("solve_spd: matrix is numerically singular");
  }
  Matrix out(n, b.cols());
  view(out) = llt.solve(Eigen::MatrixXd(view(b)));
  require_finite(out, "solve_spd result");
  return out;
}

}  // namespace neurocap
