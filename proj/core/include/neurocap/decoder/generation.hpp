#pragma once

#include <span>
#include <vector>

#include "neurocap/decoder/language_model.hpp"

namespace neurocap {

struct GenerationOptions {
  std::size_t max_len = 20;
  /// UNK is masked out of the output distribution unless enabled.
  bool allow_unk = false;
};

/// A decoded caption. `log_prob` sums the log-probabilities of every emitted
/// token (including EOS when `finished`); `score` divides it by that count.
struct Hypothesis {
  TokenSequence tokens;
  double log_prob = 0.0;
  double score = 0.0;
  bool finished = false;  ///< ended with EOS rather than hitting max_len

  std::size_t scored_length() const noexcept { return tokens.size() + (finished ? 1 : 0); }
};

/// Log-probabilities over the vocabulary after masking BOS (always) and UNK
/// (unless allowed); masked entries are -infinity.
std::vector<double> masked_log_probs(std::span<const double> logits, bool allow_unk);

/// Argmax decoding from BOS; ties go to the lower token index. Stops at EOS
/// or after max_len tokens.
Hypothesis generate_greedy(const LanguageModel& model, std::span<const double> feature,
                           const GenerationOptions& options = {});

/// Beam search. Each step keeps the `width` best extensions by cumulative
/// log-probability (ties: lexicographically smaller token sequence); EOS
/// extensions retire to the finished list. Returns min(width, completed)
/// hypotheses ranked by length-normalized score, best first.
std::vector<Hypothesis> generate_beam(const LanguageModel& model, std::span<const double> feature,
                                      std::size_t width, const GenerationOptions& options = {});

/// Total order used to rank completed hypotheses: higher score first, then
/// the lexicographically smaller token sequence.
bool ranks_before(const Hypothesis& a, const Hypothesis& b);

}  // namespace neurocap
