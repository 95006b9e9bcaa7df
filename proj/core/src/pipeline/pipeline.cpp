#include "neurocap/pipeline/pipeline.hpp"

#include <string>

#include "neurocap/errors.hpp"

namespace neurocap {

std::vector<Hypothesis> generate(const LanguageModel& lm, std::span<const double> feature,
                                 const DecodeOptions& options) {
  if (options.beam_width) return generate_beam(lm, feature, *options.beam_width, options.generation);
  return {generate_greedy(lm, feature, options.generation)};
}

std::vector<Hypothesis> decode_brain(const Regressor& regressor, const LanguageModel& lm,
                                     std::span<const double> brain, const DecodeOptions& options) {
  if (output_dim(regressor) != lm.feature_dim()) {
    throw ShapeError("decode_brain: regressor emits " + std::to_string(output_dim(regressor)) +
                     " features, language model expects " + std::to_string(lm.feature_dim()));
  }
  const std::vector<double> feature = predict(regressor, brain);
  return generate(lm, feature, options);
}

std::vector<std::vector<TokenSequence>> make_pseudo_groundtruth(const LanguageModel& lm,
                                                                const Matrix& features,
                                                                std::size_t width,
                                                                const GenerationOptions& options) {
  if (width < 1) throw ConfigError("make_pseudo_groundtruth: width must be >= 1");
  std::vector<std::vector<TokenSequence>> refs;
  refs.reserve(features.rows());
  for (std::size_t r = 0; r < features.rows(); ++r) {
    std::vector<TokenSequence> set;
    for (Hypothesis& h : generate_beam(lm, features.row(r), width, options)) {
      set.push_back(std::move(h.tokens));
    }
    refs.push_back(std::move(set));
  }
  return refs;
}

}  // namespace neurocap
