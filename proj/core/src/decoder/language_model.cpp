#include "neurocap/decoder/language_model.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"

namespace neurocap {
namespace {

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

void fill_normal(Matrix& m, double scale, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : m.values()) v = scale * normal(rng);
}

void require_shape(const Matrix& m, std::size_t rows, std::size_t cols, const char* name) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(std::string("LanguageModel: ") + name + " is " + std::to_string(m.rows()) +
                     "x" + std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                     "x" + std::to_string(cols));
  }
}

}  // namespace

void LstmLayer::step(const Matrix& x, Matrix& h, Matrix& c) const {
  const std::size_t hd = hidden_dim();
  const Matrix z = add_row(add(matmul(x, w_input), matmul(h, w_hidden)), bias);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto zr = z.row(r);
    auto hr = h.row(r);
    auto cr = c.row(r);
    for (std::size_t k = 0; k < hd; ++k) {
      const double i = sigmoid(zr[k]);
      const double f = sigmoid(zr[hd + k]);
      const double o = sigmoid(zr[2 * hd + k]);
      const double g = std::tanh(zr[3 * hd + k]);
      cr[k] = f * cr[k] + i * g;
      hr[k] = o * std::tanh(cr[k]);
    }
  }
}

std::pair<Var, Var> LstmLayer::record(Tape& tape, Var x, Var h, Var c, Var w_input_var,
                                      Var w_hidden_var, Var bias_var) const {
  const std::size_t hd = hidden_dim();
  const Var z =
      tape.add_row(tape.add(tape.matmul(x, w_input_var), tape.matmul(h, w_hidden_var)), bias_var);
  const Var i = tape.sigmoid(tape.slice_cols(z, 0, hd));
  const Var f = tape.sigmoid(tape.slice_cols(z, hd, hd));
  const Var o = tape.sigmoid(tape.slice_cols(z, 2 * hd, hd));
  const Var g = tape.tanh(tape.slice_cols(z, 3 * hd, hd));
  const Var c_next = tape.add(tape.hadamard(f, c), tape.hadamard(i, g));
  const Var h_next = tape.hadamard(o, tape.tanh(c_next));
  return {h_next, c_next};
}

void LanguageModel::validate() const {
  const std::size_t v = vocab.size();
  const std::size_t e = embedding.cols();
  const std::size_t h = lstm[0].hidden_dim();
  if (e == 0 || h == 0 || feature_proj.rows() == 0) {
    throw ShapeError("LanguageModel: dimensions must be >= 1");
  }
  require_shape(embedding, v, e, "embedding");
  require_shape(feature_proj, feature_proj.rows(), e, "feature projection");
  require_shape(feature_bias, 1, e, "feature bias");
  require_shape(lstm[0].w_input, e, 4 * h, "lstm1 input weights");
  require_shape(lstm[0].w_hidden, h, 4 * h, "lstm1 hidden weights");
  require_shape(lstm[0].bias, 1, 4 * h, "lstm1 bias");
  require_shape(lstm[1].w_input, h, 4 * h, "lstm2 input weights");
  require_shape(lstm[1].w_hidden, h, 4 * h, "lstm2 hidden weights");
  require_shape(lstm[1].bias, 1, 4 * h, "lstm2 bias");
  require_shape(out_weight, h, v, "output weights");
  require_shape(out_bias, 1, v, "output bias");
}

std::vector<std::pair<std::string, Matrix*>> LanguageModel::named_parameters() {
  return {{"embedding", &embedding},
          {"feature_proj", &feature_proj},
          {"feature_bias", &feature_bias},
          {"lstm1.w_input", &lstm[0].w_input},
          {"lstm1.w_hidden", &lstm[0].w_hidden},
          {"lstm1.bias", &lstm[0].bias},
          {"lstm2.w_input", &lstm[1].w_input},
          {"lstm2.w_hidden", &lstm[1].w_hidden},
          {"lstm2.bias", &lstm[1].bias},
          {"out_weight", &out_weight},
          {"out_bias", &out_bias}};
}

std::vector<std::pair<std::string, const Matrix*>> LanguageModel::named_parameters() const {
  auto mutable_params = const_cast<LanguageModel*>(this)->named_parameters();
  std::vector<std::pair<std::string, const Matrix*>> out;
  out.reserve(mutable_params.size());
  for (auto& [name, m] : mutable_params) out.emplace_back(name, m);
  return out;
}

LanguageModel make_language_model(Vocabulary vocab, const LanguageModelShape& shape,
                                  InitScheme init, std::uint64_t seed) {
  if (shape.feature_dim == 0 || shape.embed_dim == 0 || shape.hidden_dim == 0) {
    throw ShapeError("make_language_model: dimensions must be >= 1");
  }
  const std::size_t v = vocab.size();
  const std::size_t e = shape.embed_dim;
  const std::size_t h = shape.hidden_dim;
  LanguageModel m;
  m.vocab = std::move(vocab);
  m.embedding = Matrix(v, e);
  m.feature_proj = Matrix(shape.feature_dim, e);
  m.feature_bias = Matrix(1, e);
  m.lstm[0] = LstmLayer{Matrix(e, 4 * h), Matrix(h, 4 * h), Matrix(1, 4 * h)};
  m.lstm[1] = LstmLayer{Matrix(h, 4 * h), Matrix(h, 4 * h), Matrix(1, 4 * h)};
  m.out_weight = Matrix(h, v);
  m.out_bias = Matrix(1, v);
  if (init == InitScheme::zeros) return m;

  Rng rng = make_stream(seed, "init");
  const bool scaled = init == InitScheme::scaled_normal;
  auto fan = [scaled](std::size_t fan_in) {
    return scaled ? 1.0 / std::sqrt(static_cast<double>(fan_in)) : 1.0;
  };
  fill_normal(m.embedding, fan(e), rng);
  fill_normal(m.feature_proj, fan(shape.feature_dim), rng);
  fill_normal(m.lstm[0].w_input, fan(e), rng);
  fill_normal(m.lstm[0].w_hidden, fan(h), rng);
  fill_normal(m.lstm[1].w_input, fan(h), rng);
  fill_normal(m.lstm[1].w_hidden, fan(h), rng);
  fill_normal(m.out_weight, fan(h), rng);
  if (!scaled) {
    fill_normal(m.feature_bias, 1.0, rng);
    fill_normal(m.lstm[0].bias, 1.0, rng);
    fill_normal(m.lstm[1].bias, 1.0, rng);
    fill_normal(m.out_bias, 1.0, rng);
  }
  return m;
}

DecoderState initial_state(const LanguageModel& model) {
  const std::size_t h = model.hidden_dim();
  DecoderState s;
  for (std::size_t l = 0; l < 2; ++l) {
    s.hidden[l] = Matrix(1, h);
    s.cell[l] = Matrix(1, h);
  }
  return s;
}

std::pair<DecoderState, std::vector<double>> lstm_step(const LanguageModel& model,
                                                       const DecoderState& state,
                                                       std::span<const double> input_vec) {
  if (input_vec.size() != model.embed_dim()) {
    throw ShapeError("lstm_step: input has " + std::to_string(input_vec.size()) +
                     " values, expected " + std::to_string(model.embed_dim()));
  }
  for (std::size_t l = 0; l < 2; ++l) {
    if (state.hidden[l].rows() != 1 || state.hidden[l].cols() != model.hidden_dim() ||
        state.cell[l].rows() != 1 || state.cell[l].cols() != model.hidden_dim()) {
      throw ShapeError("lstm_step: state does not match the model's hidden size");
    }
  }
  DecoderState next = state;
  Matrix x = Matrix::row_vector(input_vec);
  model.lstm[0].step(x, next.hidden[0], next.cell[0]);
  model.lstm[1].step(next.hidden[0], next.hidden[1], next.cell[1]);
  next.timestep = state.timestep + 1;
  const Matrix logits = affine(next.hidden[1], model.out_weight, model.out_bias);
  return {std::move(next), std::vector<double>(logits.values().begin(), logits.values().end())};
}

std::vector<double> feature_input(const LanguageModel& model, std::span<const double> feature) {
  if (feature.size() != model.feature_dim()) {
    throw ShapeError("feature_input: feature has " + std::to_string(feature.size()) +
                     " values, model expects " + std::to_string(model.feature_dim()));
  }
  const Matrix x = affine(Matrix::row_vector(feature), model.feature_proj, model.feature_bias);
  return {x.values().begin(), x.values().end()};
}

std::vector<double> token_input(const LanguageModel& model, TokenId token) {
  if (token >= model.vocab_size()) {
    throw DataError("token_input: token index " + std::to_string(token) + " out of range");
  }
  auto row = model.embedding.row(token);
  return {row.begin(), row.end()};
}

std::pair<DecoderState, std::vector<double>> start_decoding(const LanguageModel& model,
                                                            std::span<const double> feature) {
  auto [state, ignored] = lstm_step(model, initial_state(model), feature_input(model, feature));
  return lstm_step(model, state, token_input(model, Vocabulary::kBos));
}

std::size_t load_word2vec_embeddings(const std::filesystem::path& path, LanguageModel& model) {
  std::istringstream in(read_file(path));
  std::size_t count = 0;
  std::size_t dim = 0;
  if (!(in >> count >> dim)) throw DataError(path.string() + ": missing \"count dim\" header");
  if (dim != model.embed_dim()) {
    throw DataError(path.string() + ": embedding width " + std::to_string(dim) +
                    " does not match model width " + std::to_string(model.embed_dim()));
  }
  Matrix updated = model.embedding;
  std::size_t replaced = 0;
  std::vector<double> row(dim);
  for (std::size_t i = 0; i < count; ++i) {
    std::string word;
    if (!(in >> word)) throw DataError(path.string() + ": expected " + std::to_string(count) + " rows");
    for (double& v : row) {
      if (!(in >> v) || !std::isfinite(v)) {
        throw DataError(path.string() + ": bad vector for \"" + word + "\"");
      }
    }
    if (auto id = model.vocab.find(word)) {
      std::copy(row.begin(), row.end(), updated.row(*id).begin());
      ++replaced;
    }
  }
  model.embedding = std::move(updated);
  return replaced;
}

}  // namespace neurocap
