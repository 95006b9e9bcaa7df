#include "neurocap/regressors/layers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "neurocap/errors.hpp"

namespace neurocap {

Matrix DenseLayer::forward(const Matrix& x) const {
  return activate(affine(x, weight, bias), activation);
}

Var DenseLayer::record(Tape& tape, Var x, Var weight_var, Var bias_var) const {
  Var z = tape.add_row(tape.matmul(x, weight_var), bias_var);
  return activation == Activation::identity ? z : tape.activation(z, activation);
}

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, InitScheme scheme,
                      Rng& rng) {
  if (in == 0 || out == 0) throw ShapeError("make_dense: layer dimensions must be >= 1");
  DenseLayer layer{Matrix(in, out), Matrix(1, out), act};
  if (scheme == InitScheme::zeros) return layer;
  std::normal_distribution<double> normal(0.0, 1.0);
  const double s = scheme == InitScheme::scaled_normal ? 1.0 / std::sqrt(static_cast<double>(in)) : 1.0;
  for (double& v : layer.weight.values()) v = s * normal(rng);
  if (scheme == InitScheme::standard_normal) {
    for (double& v : layer.bias.values()) v = normal(rng);
  }
  return layer;
}

Standardizer Standardizer::fit(const Matrix& x) {
  require_finite(x, "Standardizer::fit");
  if (x.rows() == 0) throw ShapeError("Standardizer::fit: no rows");
  Standardizer s;
  s.mean = column_means(x);
  s.scale = Matrix(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      const double d = x(r, c) - s.mean(0, c);
      s.scale(0, c) += d * d;
    }
  }
  for (double& v : s.scale.values()) {
    v = std::sqrt(v / static_cast<double>(x.rows()));
    if (v < 1e-12) v = 1.0;  // constant column
  }
  return s;
}

Matrix Standardizer::apply(const Matrix& x) const {
  if (is_identity()) return x;
  if (x.cols() != mean.cols()) {
    throw ShapeError("Standardizer: input has " + std::to_string(x.cols()) +
                     " columns, expected " + std::to_string(mean.cols()));
  }
  require_finite(x, "Standardizer::apply");
  Matrix out = x;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - mean(0, c)) / scale(0, c);
  }
  return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_stream(seed, "shuffle", epoch);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

}  // namespace neurocap
