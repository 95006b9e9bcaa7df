#include "neurocap/decoder/generation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "neurocap/errors.hpp"

namespace neurocap {
namespace {

constexpr double kMasked = -std::numeric_limits<double>::infinity();

void finalize(Hypothesis& h) {
  h.score = h.log_prob / static_cast<double>(std::max<std::size_t>(h.scored_length(), 1));
}

struct Live {
  Hypothesis hyp;
  DecoderState state;
  std::vector<double> log_probs;  ///< next-token distribution
};

struct Candidate {
  std::size_t parent = 0;
  TokenId token = 0;
  double log_prob = 0.0;
};

}  // namespace

std::vector<double> masked_log_probs(std::span<const double> logits, bool allow_unk) {
  std::vector<double> out(logits.begin(), logits.end());
  for (double v : out) {
    if (!std::isfinite(v)) throw NumericError("masked_log_probs: non-finite logit");
  }
  out[Vocabulary::kBos] = kMasked;
  if (!allow_unk) out[Vocabulary::kUnk] = kMasked;
  const double peak = *std::max_element(out.begin(), out.end());
  double z = 0.0;
  for (double v : out) {
    if (v != kMasked) z += std::exp(v - peak);
  }
  const double log_z = peak + std::log(z);
  for (double& v : out) {
    if (v != kMasked) v -= log_z;
  }
  return out;
}

bool ranks_before(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.tokens < b.tokens;
}

Hypothesis generate_greedy(const LanguageModel& model, std::span<const double> feature,
                           const GenerationOptions& options) {
  if (options.max_len < 1) throw ConfigError("generate_greedy: max_len must be >= 1");
  auto [state, logits] = start_decoding(model, feature);
  Hypothesis hyp;
  while (true) {
    const std::vector<double> lp = masked_log_probs(logits, options.allow_unk);
    // max_element returns the first maximum, i.e. the lowest index on ties.
    const auto best = static_cast<TokenId>(std::max_element(lp.begin(), lp.end()) - lp.begin());
    hyp.log_prob += lp[best];
    if (best == Vocabulary::kEos) {
      hyp.finished = true;
      break;
    }
    hyp.tokens.push_back(best);
    if (hyp.tokens.size() >= options.max_len) break;
    std::tie(state, logits) = lstm_step(model, state, token_input(model, best));
  }
  finalize(hyp);
  return hyp;
}

std::vector<Hypothesis> generate_beam(const LanguageModel& model, std::span<const double> feature,
                                      std::size_t width, const GenerationOptions& options) {
  if (width < 1) throw ConfigError("generate_beam: width must be >= 1");
  if (options.max_len < 1) throw ConfigError("generate_beam: max_len must be >= 1");

  std::vector<Hypothesis> completed;
  std::vector<Live> live;
  {
    auto [state, logits] = start_decoding(model, feature);
    live.push_back(Live{Hypothesis{}, std::move(state), masked_log_probs(logits, options.allow_unk)});
  }

  while (!live.empty()) {
    std::vector<Candidate> candidates;
    for (std::size_t p = 0; p < live.size(); ++p) {
      const std::vector<double>& lp = live[p].log_probs;
      for (TokenId t = 0; t < lp.size(); ++t) {
        if (lp[t] == kMasked) continue;
        candidates.push_back(Candidate{p, t, live[p].hyp.log_prob + lp[t]});
      }
    }
    // Live hypotheses share a length, so comparing (prefix, token)
    // lexicographically compares the extended sequences.
    auto better = [&live](const Candidate& a, const Candidate& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      const TokenSequence& pa = live[a.parent].hyp.tokens;
      const TokenSequence& pb = live[b.parent].hyp.tokens;
      if (pa != pb) return pa < pb;
      return a.token < b.token;
    };
    const std::size_t keep = std::min(width, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(keep),
                      candidates.end(), better);
    candidates.resize(keep);

    std::vector<Live> next;
    for (const Candidate& cand : candidates) {
      const Live& parent = live[cand.parent];
      Hypothesis hyp = parent.hyp;
      hyp.log_prob = cand.log_prob;
      if (cand.token == Vocabulary::kEos) {
        hyp.finished = true;
        finalize(hyp);
        completed.push_back(std::move(hyp));
        continue;
      }
      hyp.tokens.push_back(cand.token);
      if (hyp.tokens.size() >= options.max_len) {
        finalize(hyp);
        completed.push_back(std::move(hyp));
        continue;
      }
      auto [state, logits] = lstm_step(model, parent.state, token_input(model, cand.token));
      next.push_back(Live{std::move(hyp), std::move(state),
                          masked_log_probs(logits, options.allow_unk)});
    }
    live = std::move(next);
  }

  std::sort(completed.begin(), completed.end(), ranks_before);
  if (completed.size() > width) completed.resize(width);
  return completed;
}

}  // namespace neurocap
