#include "neurocap/regressors/mlp.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/losses.hpp"

namespace neurocap {

void MlpModel::validate() const {
  if (arch.size() < 2) throw ShapeError("MlpModel: arch needs input and output widths");
  if (layers.size() + 1 != arch.size()) {
    throw ShapeError("MlpModel: " + std::to_string(layers.size()) + " layers for an arch of " +
                     std::to_string(arch.size()) + " widths");
  }
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const DenseLayer& l = layers[i];
    if (l.input_dim() != arch[i] || l.output_dim() != arch[i + 1] || l.bias.rows() != 1 ||
        l.bias.cols() != arch[i + 1]) {
      throw ShapeError("MlpModel: layer " + std::to_string(i) + " does not match arch");
    }
  }
  if (layers.back().activation != Activation::identity) {
    throw ShapeError("MlpModel: output layer must be linear");
  }
  if (!input.is_identity() && input.mean.cols() != arch.front()) {
    throw ShapeError("MlpModel: standardizer width does not match input");
  }
}

Matrix MlpModel::predict(const Matrix& x) const {
  if (x.cols() != input_dim()) {
    throw ShapeError("MlpModel::predict: input has " + std::to_string(x.cols()) +
                     " columns, model expects " + std::to_string(input_dim()));
  }
  Matrix h = input.apply(x);
  for (const DenseLayer& l : layers) h = l.forward(h);
  return h;
}

MlpModel make_mlp(const std::vector<std::size_t>& arch, Activation hidden, InitScheme init,
                  std::uint64_t seed) {
  if (arch.size() < 2) throw ShapeError("make_mlp: arch needs input and output widths");
  Rng rng = make_stream(seed, "init");
  MlpModel model;
  model.arch = arch;
  for (std::size_t i = 0; i + 1 < arch.size(); ++i) {
    const bool last = i + 2 == arch.size();
    model.layers.push_back(
        make_dense(arch[i], arch[i + 1], last ? Activation::identity : hidden, init, rng));
  }
  return model;
}

Var record_mlp_loss(Tape& tape, const MlpModel& model, std::span<const Var> params, Var x,
                    const Matrix& y) {
  if (params.size() != 2 * model.layers.size()) {
    throw ShapeError("record_mlp_loss: expected weight and bias per layer");
  }
  Var h = x;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    h = model.layers[i].record(tape, h, params[2 * i], params[2 * i + 1]);
  }
  return tape.mse(h, y);
}

namespace {

double dataset_mse(const MlpModel& model, const Matrix& xs, const Matrix& y) {
  Matrix h = xs;
  for (const DenseLayer& l : model.layers) h = l.forward(h);
  return mse_loss(h, y).loss;
}

void require_finite_loss(double loss, std::size_t epoch) {
  if (!std::isfinite(loss)) {
    throw NumericError("training diverged: non-finite loss at epoch " + std::to_string(epoch));
  }
}

}  // namespace

TrainLog fit_network(MlpModel& model, const Matrix& x, const Matrix& y, const SgdConfig& cfg,
                     std::size_t first_epoch, std::size_t epochs, std::uint64_t seed,
                     const MlpOptions& options) {
  model.validate();
  if (x.rows() != y.rows()) throw ShapeError("fit_network: X and Y row counts differ");
  if (x.cols() != model.input_dim() || y.cols() != model.output_dim()) {
    throw ShapeError("fit_network: data dimensions do not match arch");
  }
  if (x.rows() == 0) throw ShapeError("fit_network: no samples");
  if (options.batch_size == 0) throw ConfigError("fit_network: batch size must be >= 1");
  const SgdOptimizer optimizer(cfg);

  const Matrix xs = model.input.apply(x);
  const bool has_val = options.val_x.has_value() && options.val_y.has_value();
  const Matrix val_xs = has_val ? model.input.apply(*options.val_x) : Matrix{};
  const double nan = std::numeric_limits<double>::quiet_NaN();

  TrainLog log;
  log.initial_train_mse = dataset_mse(model, xs, y);
  log.initial_val_mse = has_val ? dataset_mse(model, val_xs, *options.val_y) : nan;

  ParameterRefs refs;
  for (DenseLayer& l : model.layers) {
    refs.add(l.weight, true);
    refs.add(l.bias, false);
  }

  const std::size_t n = x.rows();
  for (std::size_t epoch = first_epoch; epoch < first_epoch + epochs; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(n, seed, epoch);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t count = std::min(options.batch_size, n - start);
      const std::span<const std::size_t> idx(order.data() + start, count);
      Tape tape;
      std::vector<Var> params;
      for (Matrix* p : refs.params) params.push_back(tape.variable(*p));
      const Var xb = tape.constant(xs.select_rows(idx));
      const Var loss = record_mlp_loss(tape, model, params, xb, y.select_rows(idx));
      const double value = tape.value(loss)(0, 0);
      require_finite_loss(value, epoch);
      tape.backward(loss);
      std::vector<Matrix> grads;
      grads.reserve(params.size());
      for (Var p : params) grads.push_back(tape.grad(p));
      optimizer.step(refs, grads);
      loss_sum += value;
      ++batches;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(batches);
    rec.train_mse = dataset_mse(model, xs, y);
    rec.val_mse = has_val ? dataset_mse(model, val_xs, *options.val_y) : nan;
    require_finite_loss(rec.train_mse, epoch);
    log.epochs.push_back(rec);
  }
  return log;
}

MlpFit mlp_fit(const Matrix& x, const Matrix& y, const std::vector<std::size_t>& arch,
               const SgdConfig& cfg, std::size_t epochs, std::uint64_t seed,
               const MlpOptions& options) {
  if (arch.size() < 2 || arch.front() != x.cols() || arch.back() != y.cols()) {
    throw ShapeError("mlp_fit: arch must start at the input width (" + std::to_string(x.cols()) +
                     ") and end at the output width (" + std::to_string(y.cols()) + ")");
  }
  MlpFit fit;
  fit.model = make_mlp(arch, options.hidden, options.init, seed);
  if (options.standardize) fit.model.input = Standardizer::fit(x);
  fit.log = fit_network(fit.model, x, y, cfg, 0, epochs, seed, options);
  return fit;
}

}  // namespace neurocap
