#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/mathcore/tape.hpp"
#include "neurocap/rng.hpp"

namespace neurocap {

enum class InitScheme {
  /// N(0, 1) scaled by 1/sqrt(fan_in); biases zero.
  scaled_normal,
  /// Literal standard-normal draws for weights and biases.
  standard_normal,
  /// All parameters zero.
  zeros,
};

/// y = act(x W + b)
struct DenseLayer {
  Matrix weight;  ///< in x out
  Matrix bias;    ///< 1 x out
  Activation activation = Activation::identity;

  std::size_t input_dim() const noexcept { return weight.rows(); }
  std::size_t output_dim() const noexcept { return weight.cols(); }
  Matrix forward(const Matrix& x) const;
  Var record(Tape& tape, Var x, Var weight_var, Var bias_var) const;
};

DenseLayer make_dense(std::size_t in, std::size_t out, Activation act, InitScheme scheme,
                      Rng& rng);

/// Per-column z-scoring with statistics frozen at fit time. An empty
/// standardizer is the identity.
struct Standardizer {
  Matrix mean;   ///< 1 x d, or empty
  Matrix scale;  ///< 1 x d, or empty

  static Standardizer fit(const Matrix& x);
  bool is_identity() const noexcept { return mean.empty(); }
  Matrix apply(const Matrix& x) const;
};

/// Per-epoch training record. Epochs are numbered from 0.
struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  ///< mean minibatch loss during the epoch
  double train_mse = 0.0;   ///< full training-set MSE after the epoch
  double val_mse = 0.0;     ///< validation MSE after the epoch (NaN if none)
};

struct TrainLog {
  double initial_train_mse = 0.0;
  double initial_val_mse = 0.0;
  std::vector<EpochRecord> epochs;
};

/// Minibatch order for one epoch, a permutation of [0, n).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch);

}  // namespace neurocap
