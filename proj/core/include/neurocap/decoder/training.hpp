#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neurocap/decoder/language_model.hpp"
#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/mathcore/tape.hpp"
#include "neurocap/optim/optim.hpp"

namespace neurocap {

/// Throws DataError unless every caption token indexes the vocabulary and
/// no caption contains BOS or EOS.
void validate_captions(const LanguageModel& model, std::span<const TokenSequence> captions);

/// Teacher-forced loss for a batch: the mean negative log-likelihood over all
/// gold tokens including the closing EOS. Row r of `features` conditions
/// captions[r]. `params` follow LanguageModel::named_parameters() order.
Var record_lm_loss(Tape& tape, const LanguageModel& model, std::span<const Var> params,
                   const Matrix& features, std::span<const TokenSequence> captions);

/// Mean per-token negative log-likelihood (natural log) over a corpus.
double mean_token_nll(const LanguageModel& model, const Matrix& features,
                      std::span<const TokenSequence> captions, std::size_t batch_size = 64);

/// exp(mean_token_nll). Throws DataError on an empty corpus.
double perplexity(const LanguageModel& model, const Matrix& features,
                  std::span<const TokenSequence> captions);

struct LmEpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;  ///< token-weighted mean NLL during the epoch
  double perplexity = 0.0;  ///< corpus perplexity after the epoch
};

struct LmTrainOptions {
  std::size_t batch_size = 32;
};

/// Resumable Adam training loop. Epoch e shuffles with the (seed, e) stream,
/// so a trainer rebuilt from a checkpoint continues the exact same run.
class LmTrainer {
 public:
  LmTrainer(LanguageModel model, AdamConfig cfg, std::uint64_t seed, LmTrainOptions options = {});
  /// Restores optimizer moments and the epoch counter.
  LmTrainer(LanguageModel model, AdamConfig cfg, std::vector<AdamState> states,
            std::size_t next_epoch, std::uint64_t seed, LmTrainOptions options = {});

  LmEpochRecord run_epoch(const Matrix& features, std::span<const TokenSequence> captions);
  std::vector<LmEpochRecord> train(const Matrix& features, std::span<const TokenSequence> captions,
                                   std::size_t epochs);

  const LanguageModel& model() const noexcept { return model_; }
  LanguageModel release() && { return std::move(model_); }
  const AdamConfig& config() const noexcept { return optimizer_.config(); }
  const std::vector<AdamState>& optimizer_states() const noexcept { return optimizer_.states(); }
  std::size_t next_epoch() const noexcept { return next_epoch_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const LmTrainOptions& options() const noexcept { return options_; }

 private:
  ParameterRefs refs();

  LanguageModel model_;
  AdamOptimizer optimizer_;
  std::size_t next_epoch_ = 0;
  std::uint64_t seed_ = 0;
  LmTrainOptions options_;
};

struct LmFit {
  LanguageModel model;
  std::vector<LmEpochRecord> log;
};

/// Trains `model` for `epochs` passes over (features, captions).
LmFit train_lm(const Matrix& features, std::span<const TokenSequence> captions,
               LanguageModel model, const AdamConfig& cfg, std::size_t epochs,
               std::uint64_t seed, const LmTrainOptions& options = {});

}  // namespace neurocap
