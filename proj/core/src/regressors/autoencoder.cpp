#include "neurocap/regressors/autoencoder.hpp"

#include <algorithm>
#include <string>

#include "neurocap/errors.hpp"

namespace neurocap {

std::vector<std::size_t> AutoencoderStack::hidden_dims() const {
  std::vector<std::size_t> dims;
  for (const DenseLayer& e : encoders) dims.push_back(e.output_dim());
  return dims;
}

void AutoencoderStack::validate() const {
  if (encoders.empty()) throw ShapeError("AutoencoderStack: no layers");
  if (decoders.size() != encoders.size() || loss_curves.size() != encoders.size()) {
    throw ShapeError("AutoencoderStack: encoder, decoder and curve counts differ");
  }
  for (std::size_t i = 0; i < encoders.size(); ++i) {
    const DenseLayer& e = encoders[i];
    const DenseLayer& d = decoders[i];
    if (i > 0 && e.input_dim() != encoders[i - 1].output_dim()) {
      throw ShapeError("AutoencoderStack: layer " + std::to_string(i) + " does not chain");
    }
    if (d.input_dim() != e.output_dim() || d.output_dim() != e.input_dim()) {
      throw ShapeError("AutoencoderStack: decoder " + std::to_string(i) + " shape mismatch");
    }
  }
}

AutoencoderStack ae_pretrain(const Matrix& x, const std::vector<std::size_t>& hidden_dims,
                             std::size_t epochs_per_layer, const SgdConfig& cfg,
                             std::uint64_t seed, const AutoencoderOptions& options) {
  if (hidden_dims.empty()) throw ShapeError("ae_pretrain: hidden_dims must be nonempty");
  if (x.rows() == 0) throw ShapeError("ae_pretrain: no samples");
  AutoencoderStack stack;
  if (options.standardize) stack.input = Standardizer::fit(x);
  Matrix h = stack.input.apply(x);

  MlpOptions fit_options;
  fit_options.batch_size = options.batch_size;
  for (std::size_t i = 0; i < hidden_dims.size(); ++i) {
    const std::uint64_t layer_seed = seed + 0x9E3779B97F4A7C15ULL * (i + 1);
    MlpModel ae = make_mlp({h.cols(), hidden_dims[i], h.cols()}, options.activation,
                           options.init, layer_seed);
    const TrainLog log = fit_network(ae, h, h, cfg, 0, epochs_per_layer, layer_seed, fit_options);
    std::vector<double> curve;
    curve.reserve(log.epochs.size());
    for (const EpochRecord& r : log.epochs) curve.push_back(r.train_mse);
    stack.loss_curves.push_back(std::move(curve));
    h = ae.layers[0].forward(h);
    stack.encoders.push_back(std::move(ae.layers[0]));
    stack.decoders.push_back(std::move(ae.layers[1]));
  }
  return stack;
}

MlpFit dnn_fit(const Matrix& x, const Matrix& y, const std::vector<std::size_t>& arch,
               const AutoencoderStack* init, const SgdConfig& cfg, std::size_t epochs,
               std::uint64_t seed, const MlpOptions& options) {
  if (init == nullptr) return mlp_fit(x, y, arch, cfg, epochs, seed, options);

  init->validate();
  const std::vector<std::size_t> hidden = init->hidden_dims();
  if (arch.size() != hidden.size() + 2 || arch.front() != init->input_dim() ||
      !std::equal(hidden.begin(), hidden.end(), arch.begin() + 1)) {
    throw ShapeError("dnn_fit: autoencoder stack dimensions do not match arch");
  }
  if (arch.front() != x.cols() || arch.back() != y.cols()) {
    throw ShapeError("dnn_fit: arch does not match data dimensions");
  }

  // Output layer: the draw mlp_fit makes for this seed.
  MlpFit fit;
  fit.model = make_mlp(arch, options.hidden, options.init, seed);
  std::copy(init->encoders.begin(), init->encoders.end(), fit.model.layers.begin());
  fit.model.input = init->input;
  fit.log = fit_network(fit.model, x, y, cfg, 0, epochs, seed, options);
  return fit;
}

}  // namespace neurocap
