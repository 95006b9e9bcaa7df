#include "neurocap/regressors/ridge.hpp"

#include <string>

#include "neurocap/errors.hpp"

namespace neurocap {

Matrix RidgeModel::predict(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("RidgeModel::predict: input has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(input_dim()));
  }
  return affine(input.apply(x), weight, bias);
}

RidgeModel ridge_fit(const Matrix& x, const Matrix& y, const RidgeOptions& options) {
  if (x.rows() == 0) throw ShapeError("ridge_fit: no samples");
  if (x.rows() != y.rows()) {
    throw ShapeError("ridge_fit: X has " + std::to_string(x.rows()) + " rows, Y has " +
                     std::to_string(y.rows()));
  }
  if (!(options.lambda >= 0.0)) throw ConfigError("ridge_fit: lambda must be >= 0");
  require_finite(x, "ridge_fit");
  require_finite(y, "ridge_fit");

  RidgeModel model;
  model.lambda = options.lambda;
  if (options.standardize) model.input = Standardizer::fit(x);
  Matrix xs = model.input.apply(x);
  Matrix ys = y;
  Matrix x_mean(1, x.cols());
  Matrix y_mean(1, y.cols());
  if (options.fit_intercept) {
    x_mean = column_means(xs);
    y_mean = column_means(ys);
    xs = add_row(xs, scaled(x_mean, -1.0));
    ys = add_row(ys, scaled(y_mean, -1.0));
  }

  const std::size_t n = xs.rows();
  const std::size_t d = xs.cols();
  if (d > n && options.lambda > 0.0) {
    // W = Xᵀ (X Xᵀ + λI)⁻¹ Y
    Matrix gram = matmul_nt(xs, xs);
    for (std::size_t i = 0; i < n; ++i) gram(i, i) += options.lambda;
    model.weight = matmul_tn(xs, solve_spd(gram, ys));
  } else {
    Matrix gram = matmul_tn(xs, xs);
    for (std::size_t i = 0; i < d; ++i) gram(i, i) += options.lambda;
    model.weight = solve_spd(gram, matmul_tn(xs, ys));
  }
  model.bias = subtract(y_mean, matmul(x_mean, model.weight));
  require_finite(model.weight, "ridge_fit result");
  return model;
}

}  // namespace neurocap
