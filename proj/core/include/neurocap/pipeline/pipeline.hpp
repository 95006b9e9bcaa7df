#pragma once

#include <optional>
#include <span>
#include <vector>

#include "neurocap/decoder/generation.hpp"
#include "neurocap/decoder/language_model.hpp"
#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/regressors/regressor.hpp"

namespace neurocap {

struct DecodeOptions {
  /// Greedy decoding when unset; otherwise beam search of this width.
  std::optional<std::size_t> beam_width;
  GenerationOptions generation;
};

/// Caption(s) for a feature vector: one greedy hypothesis, or the ranked
/// beam list.
std::vector<Hypothesis> generate(const LanguageModel& lm, std::span<const double> feature,
                                 const DecodeOptions& options = {});

/// Brain record -> predicted feature -> caption(s). Exactly
/// generate(lm, predict(regressor, brain)); no image is consumed.
std::vector<Hypothesis> decode_brain(const Regressor& regressor, const LanguageModel& lm,
                                     std::span<const double> brain,
                                     const DecodeOptions& options = {});

/// Per feature row, the `width`-best beam captions used as its reference set.
std::vector<std::vector<TokenSequence>> make_pseudo_groundtruth(
    const LanguageModel& lm, const Matrix& features, std::size_t width = 10,
    const GenerationOptions& options = {});

}  // namespace neurocap
