#pragma once

#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/regressors/layers.hpp"

namespace neurocap {

struct RidgeOptions {
  double lambda = 0.5;
  /// Unpenalized intercept, fitted by centering X and Y.
  bool fit_intercept = true;
  /// z-score inputs with training statistics before fitting.
  bool standardize = false;
};

/// Linear map y = standardize(x) W + b.
struct RidgeModel {
  Matrix weight;  ///< in x out
  Matrix bias;    ///< 1 x out
  double lambda = 0.0;
  Standardizer input;

  std::size_t input_dim() const noexcept { return weight.rows(); }
  std::size_t output_dim() const noexcept { return weight.cols(); }
  Matrix predict(const Matrix& x) const;
};

/// Closed-form ridge regression: W = (XᵀX + λI)⁻¹ XᵀY via a Cholesky solve
/// (the n x n dual system when there are more inputs than samples and λ > 0).
/// Throws SolverError when λ = 0 and X is rank-deficient.
RidgeModel ridge_fit(const Matrix& x, const Matrix& y, const RidgeOptions& options = {});

}  // namespace neurocap
