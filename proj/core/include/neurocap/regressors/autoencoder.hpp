#pragma once

#include <cstdint>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/optim/optim.hpp"
#include "neurocap/regressors/layers.hpp"
#include "neurocap/regressors/mlp.hpp"

namespace neurocap {

/// Greedily trained encoder stack. encoders[i] maps the activations of
/// layer i-1 (the standardized input for i = 0) to hidden width i.
struct AutoencoderStack {
  std::vector<DenseLayer> encoders;
  std::vector<DenseLayer> decoders;  ///< linear reconstructions, untied
  /// loss_curves[i][e]: full-data reconstruction MSE of layer i after epoch e.
  std::vector<std::vector<double>> loss_curves;
  Standardizer input;

  std::vector<std::size_t> hidden_dims() const;
  std::size_t input_dim() const noexcept {
    return encoders.empty() ? 0 : encoders.front().input_dim();
  }
  /// Throws ShapeError if consecutive layers do not chain.
  void validate() const;
};

struct AutoencoderOptions {
  Activation activation = Activation::relu;
  InitScheme init = InitScheme::scaled_normal;
  std::size_t batch_size = 32;
  bool standardize = false;
};

/// Layer-wise reconstruction training: layer i is an untied, noise-free
/// autoencoder in -> hidden_dims[i] -> in fitted to the encodings of layer i-1.
AutoencoderStack ae_pretrain(const Matrix& x, const std::vector<std::size_t>& hidden_dims,
                             std::size_t epochs_per_layer, const SgdConfig& cfg,
                             std::uint64_t seed, const AutoencoderOptions& options = {});

/// Fine-tunes a deep regressor on (x, y). With `init`, hidden layers start
/// from the stack's encoders (and its input standardizer) and the output
/// layer is the one mlp_fit would draw for `seed`. Without it, behaves like
/// mlp_fit.
MlpFit dnn_fit(const Matrix& x, const Matrix& y, const std::vector<std::size_t>& arch,
               const AutoencoderStack* init, const SgdConfig& cfg, std::size_t epochs,
               std::uint64_t seed, const MlpOptions& options = {});

}  // namespace neurocap
