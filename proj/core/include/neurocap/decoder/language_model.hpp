#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neurocap/decoder/vocabulary.hpp"
#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/mathcore/tape.hpp"
#include "neurocap/regressors/layers.hpp"

namespace neurocap {

/// One LSTM layer. Gate pre-activations z = x Wx + h Wh + b are laid out
/// column-wise as [input | forget | output | candidate], each `hidden` wide.
struct LstmLayer {
  Matrix w_input;   ///< in x 4H
  Matrix w_hidden;  ///< H x 4H
  Matrix bias;      ///< 1 x 4H

  std::size_t input_dim() const noexcept { return w_input.rows(); }
  std::size_t hidden_dim() const noexcept { return w_hidden.rows(); }
  std::size_t parameter_count() const noexcept {
    return w_input.size() + w_hidden.size() + bias.size();
  }

  /// Advances (h, c) by one step for a batch of rows.
  void step(const Matrix& x, Matrix& h, Matrix& c) const;
  /// Tape version of step; returns the new (h, c).
  std::pair<Var, Var> record(Tape& tape, Var x, Var h, Var c, Var w_input_var,
                             Var w_hidden_var, Var bias_var) const;
};

/// Feature-conditioned two-layer LSTM language model.
///
/// The image feature is projected to the embedding width and fed as the
/// first input; the model then reads BOS and predicts the caption tokens
/// followed by EOS.
struct LanguageModel {
  Vocabulary vocab;
  Matrix embedding;     ///< V x E
  Matrix feature_proj;  ///< F x E
  Matrix feature_bias;  ///< 1 x E
  std::array<LstmLayer, 2> lstm;
  Matrix out_weight;  ///< H x V
  Matrix out_bias;    ///< 1 x V

  std::size_t vocab_size() const noexcept { return vocab.size(); }
  std::size_t embed_dim() const noexcept { return embedding.cols(); }
  std::size_t feature_dim() const noexcept { return feature_proj.rows(); }
  std::size_t hidden_dim() const noexcept { return lstm[0].hidden_dim(); }

  /// Throws ShapeError if any parameter shape disagrees with the others.
  void validate() const;

  /// Parameters in a fixed order with stable names, for optimizers and
  /// checkpoints.
  std::vector<std::pair<std::string, Matrix*>> named_parameters();
  std::vector<std::pair<std::string, const Matrix*>> named_parameters() const;
};

struct LanguageModelShape {
  std::size_t feature_dim = 4096;
  std::size_t embed_dim = 512;
  std::size_t hidden_dim = 512;
};

LanguageModel make_language_model(Vocabulary vocab, const LanguageModelShape& shape,
                                  InitScheme init, std::uint64_t seed);

/// Per-layer hidden and cell rows for a single sequence.
struct DecoderState {
  std::array<Matrix, 2> hidden;
  std::array<Matrix, 2> cell;
  std::size_t timestep = 0;
};

DecoderState initial_state(const LanguageModel& model);

/// Advances the state by one input vector (length embed_dim) and returns the
/// new state with the vocabulary logits of the top layer.
std::pair<DecoderState, std::vector<double>> lstm_step(const LanguageModel& model,
                                                       const DecoderState& state,
                                                       std::span<const double> input_vec);

/// Projects a feature vector to the embedding width.
std::vector<double> feature_input(const LanguageModel& model, std::span<const double> feature);
std::vector<double> token_input(const LanguageModel& model, TokenId token);

/// State after consuming the feature and BOS, together with the logits of
/// the first caption token.
std::pair<DecoderState, std::vector<double>> start_decoding(const LanguageModel& model,
                                                            std::span<const double> feature);

/// Overwrites embedding rows of tokens listed in a word2vec text file
/// ("count dim" header, then "word v1 ... vdim"). Throws DataError when the
/// file's width differs from embed_dim. Returns the number of rows replaced.
std::size_t load_word2vec_embeddings(const std::filesystem::path& path, LanguageModel& model);

}  // namespace neurocap
