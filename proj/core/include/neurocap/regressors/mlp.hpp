#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/optim/optim.hpp"
#include "neurocap/regressors/layers.hpp"

namespace neurocap {

/// Feed-forward regression network. arch lists every layer width including
/// input and output, e.g. {65665, 8000, 4096}. Hidden layers share one
/// activation; the output layer is linear.
struct MlpModel {
  std::vector<std::size_t> arch;
  std::vector<DenseLayer> layers;
  Standardizer input;

  std::size_t input_dim() const noexcept { return arch.empty() ? 0 : arch.front(); }
  std::size_t output_dim() const noexcept { return arch.empty() ? 0 : arch.back(); }
  /// Throws ShapeError if layers and arch disagree.
  void validate() const;
  Matrix predict(const Matrix& x) const;
};

struct MlpOptions {
  Activation hidden = Activation::relu;
  InitScheme init = InitScheme::scaled_normal;
  std::size_t batch_size = 32;
  bool standardize = false;
  /// Optional held-out split evaluated after every epoch.
  std::optional<Matrix> val_x;
  std::optional<Matrix> val_y;
};

struct MlpFit {
  MlpModel model;
  TrainLog log;
};

/// Randomly initialised network for `arch` (at least input and output).
MlpModel make_mlp(const std::vector<std::size_t>& arch, Activation hidden, InitScheme init,
                  std::uint64_t seed);

/// Minibatch SGD on MSE with global-norm clipping and weight decay on
/// weights (not biases). `epochs` may be zero.
MlpFit mlp_fit(const Matrix& x, const Matrix& y, const std::vector<std::size_t>& arch,
               const SgdConfig& cfg, std::size_t epochs, std::uint64_t seed,
               const MlpOptions& options = {});

/// Continues training `model` in place from `first_epoch`; the shuffle order
/// of each epoch depends only on (seed, epoch index).
TrainLog fit_network(MlpModel& model, const Matrix& x, const Matrix& y, const SgdConfig& cfg,
                     std::size_t first_epoch, std::size_t epochs, std::uint64_t seed,
                     const MlpOptions& options);

/// Records the network MSE on (x, y) with `params` = {W0, b0, W1, b1, ...}
/// standing in for the model's own parameters.
Var record_mlp_loss(Tape& tape, const MlpModel& model, std::span<const Var> params,
                    Var x, const Matrix& y);

}  // namespace neurocap
