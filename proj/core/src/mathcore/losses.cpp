#include "neurocap/mathcore/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neurocap/errors.hpp"

namespace neurocap {

Matrix log_softmax_rows(const Matrix& logits) {
  require_finite(logits, "log_softmax_rows");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto o = out.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (double v : in) z += std::exp(v - peak);
    const double log_z = peak + std::log(z);
    for (std::size_t c = 0; c < in.size(); ++c) o[c] = in[c] - log_z;
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  require_finite(logits, "softmax_rows");
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto in = logits.row(r);
    auto o = out.row(r);
    const double peak = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      o[c] = std::exp(in[c] - peak);
      z += o[c];
    }
    for (double& v : o) v /= z;
  }
  return out;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> targets,
                                 std::span<const double> weights) {
  if (targets.size() != logits.rows() || weights.size() != logits.rows()) {
    throw ShapeError("softmax_cross_entropy: need one target and weight per row (" +
                     std::to_string(logits.rows()) + " rows)");
  }
  if (logits.cols() == 0) throw ShapeError("softmax_cross_entropy: empty vocabulary");
  double total_weight = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (!std::isfinite(weights[r]) || weights[r] < 0.0) {
      throw NumericError("softmax_cross_entropy: weights must be finite and non-negative");
    }
    if (weights[r] > 0.0 && targets[r] >= logits.cols()) {
      throw DataError("softmax_cross_entropy: target index " + std::to_string(targets[r]) +
                      " out of range for " + std::to_string(logits.cols()) + " classes");
    }
    total_weight += weights[r];
  }
  LossResult result{0.0, softmax_rows(logits)};
  if (total_weight == 0.0) {
    result.grad = Matrix(logits.rows(), logits.cols());
    return result;
  }
  const Matrix log_probs = log_softmax_rows(logits);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto g = result.grad.row(r);
    const double w = weights[r] / total_weight;
    if (weights[r] == 0.0) {
      std::fill(g.begin(), g.end(), 0.0);
      continue;
    }
    result.loss -= w * log_probs(r, targets[r]);
    g[targets[r]] -= 1.0;
    for (double& v : g) v *= w;
  }
  return result;
}

LossResult softmax_cross_entropy(const Matrix& logits, std::span<const std::size_t> targets) {
  const std::vector<double> ones(logits.rows(), 1.0);
  return softmax_cross_entropy(logits, targets, ones);
}

LossResult mse_loss(const Matrix& pred, const Matrix& target) {
  require_same_shape(pred, target, "mse_loss");
  require_finite(pred, "mse_loss");
  require_finite(target, "mse_loss");
  LossResult result{0.0, Matrix(pred.rows(), pred.cols())};
  if (pred.size() == 0) return result;
  const double inv = 1.0 / static_cast<double>(pred.size());
  auto p = pred.values();
  auto t = target.values();
  auto g = result.grad.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p[i] - t[i];
    result.loss += d * d;
    g[i] = 2.0 * d * inv;
  }
  result.loss *= inv;
  return result;
}

}  // namespace neurocap
