#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neurocap/decoder/vocabulary.hpp"

namespace neurocap {

/// Substituted for a zero clipped n-gram count so the geometric mean stays
/// defined; an empty-overlap candidate scores about 1e-9.
inline constexpr double kBleuEpsilon = 1e-9;
inline constexpr double kMeteorRecallWeight = 9.0;  // F = 10PR / (R + 9P)
inline constexpr double kMeteorPenaltyWeight = 0.5;
inline constexpr double kMeteorPenaltyExponent = 3.0;

/// Clipped n-gram statistics of one candidate against its references.
struct BleuStats {
  std::array<std::size_t, 4> matches{};  ///< clipped matches for n = 1..4
  std::array<std::size_t, 4> totals{};   ///< candidate n-gram counts
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;  ///< closest reference length (ties: shorter)

  BleuStats& operator+=(const BleuStats& other);
};

BleuStats bleu_stats(const Sentence& candidate, std::span<const Sentence> references);
/// Brevity penalty times the geometric mean of the four n-gram precisions.
double bleu_from_stats(const BleuStats& stats);
/// Sentence-level BLEU-4. Throws DataError on an empty reference set.
double bleu4(const Sentence& candidate, std::span<const Sentence> references);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
};

/// Exact-match unigram alignment with the most matches and, among those,
/// the fewest chunks.
MeteorAlignment meteor_align(const Sentence& candidate, const Sentence& reference);
/// Best alignment score over the references.
double meteor_lite(const Sentence& candidate, std::span<const Sentence> references);

struct SampleScore {
  std::string id;
  double score = 0.0;
};

struct MetricReport {
  std::string metric;
  double corpus_score = 0.0;
  std::vector<SampleScore> per_sample;
  std::map<std::string, std::string> parameters;
};

struct CandidateSample {
  std::string id;
  Sentence candidate;
};

struct ReferenceSet {
  std::string id;
  std::vector<Sentence> references;
};

/// BLEU-4 (corpus score from pooled n-gram counts) and meteor_lite (corpus
/// score = mean of per-sample scores). Every candidate id must have exactly
/// one reference set and vice versa.
std::pair<MetricReport, MetricReport> evaluate_run(std::span<const CandidateSample> candidates,
                                                   std::span<const ReferenceSet> references);

/// {"metric", "corpus_score", "parameters", "per_sample": [{"id", "score"}]}
void write_report_json(const std::filesystem::path& path, const MetricReport& report);
/// Rows "metric,id,score" with a final "corpus" row.
void write_report_csv(const std::filesystem::path& path, const MetricReport& report);

}  // namespace neurocap
