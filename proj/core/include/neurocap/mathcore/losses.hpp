#pragma once

#include <cstddef>
#include <span>

#include "neurocap/mathcore/matrix.hpp"

namespace neurocap {

struct LossResult {
  double loss = 0.0;
  Matrix grad;  ///< d loss / d input, same shape as the input
};

/// Row-wise softmax. Each row sums to one.
Matrix softmax_rows(const Matrix& logits);

/// Row-wise log-softmax, computed with the max-shift for stability.
Matrix log_softmax_rows(const Matrix& logits);

/// Mean negative log-likelihood of `targets` (one per row of `logits`).
///
/// grad = (softmax(logits) - onehot(targets)) / rows. Throws DataError on a
/// target index outside [0, cols).
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> targets);

/// Weighted variant: row r contributes weights[r] * nll_r, and the total is
/// divided by the sum of weights. Rows with weight 0 are ignored (their
/// target is not range-checked).
LossResult softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> targets,
                                 std::span<const double> weights);

/// Mean of squared elementwise differences; grad = 2 (pred - target) / count.
LossResult mse_loss(const Matrix& pred, const Matrix& target);

}  // namespace neurocap
