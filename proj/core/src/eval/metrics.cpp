#include "neurocap/eval/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"

namespace neurocap {
namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> count_ngrams(const Sentence& s, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[Ngram(s.begin() + static_cast<std::ptrdiff_t>(i),
                   s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// Depth-first search over alignments. Every alignment kept must reach the
// maximum match count; among those the fewest chunks wins.
class AlignmentSearch {
 public:
  AlignmentSearch(const Sentence& cand, const Sentence& ref) : cand_(cand) {
    for (std::size_t j = 0; j < ref.size(); ++j) positions_[ref[j]].push_back(j);
    std::unordered_map<std::string, std::size_t> cand_counts;
    for (const std::string& w : cand) ++cand_counts[w];
    for (const auto& [w, c] : cand_counts) {
      auto it = positions_.find(w);
      if (it != positions_.end()) target_ += std::min(c, it->second.size());
    }
    used_.assign(ref.size(), false);
  }

  std::pair<std::size_t, std::size_t> run() {
    if (target_ == 0) return {0, 0};
    search(0, 0, 0, kNone);
    return {target_, best_chunks_};
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  static constexpr std::size_t kBudget = 200000;

  // Upper bound on further matches from candidate position i onwards.
  std::size_t reachable(std::size_t i) const {
    std::unordered_map<std::string, std::size_t> need;
    for (std::size_t k = i; k < cand_.size(); ++k) ++need[cand_[k]];
    std::size_t total = 0;
    for (const auto& [w, c] : need) {
      auto it = positions_.find(w);
      if (it == positions_.end()) continue;
      std::size_t free = 0;
      for (std::size_t j : it->second) free += used_[j] ? 0 : 1;
      total += std::min(c, free);
    }
    return total;
  }

  void search(std::size_t i, std::size_t matched, std::size_t chunks, std::size_t prev_ref) {
    if (++nodes_ > kBudget && best_chunks_ != kNone) return;
    if (best_chunks_ != kNone && chunks >= best_chunks_) return;
    if (matched == target_) {
      best_chunks_ = chunks;
      return;
    }
    if (i == cand_.size() || matched + reachable(i) < target_) return;

    auto it = positions_.find(cand_[i]);
    if (it != positions_.end()) {
      // Try the position that extends the current chunk first.
      std::vector<std::size_t> options;
      for (std::size_t j : it->second) {
        if (!used_[j]) options.push_back(j);
      }
      std::stable_partition(options.begin(), options.end(), [prev_ref](std::size_t j) {
        return prev_ref != kNone && j == prev_ref + 1;
      });
      for (std::size_t j : options) {
        const bool extends = prev_ref != kNone && j == prev_ref + 1;
        used_[j] = true;
        search(i + 1, matched + 1, chunks + (extends ? 0 : 1), j);
        used_[j] = false;
      }
    }
    search(i + 1, matched, chunks, kNone);
  }

  const Sentence& cand_;
  std::unordered_map<std::string, std::vector<std::size_t>> positions_;
  std::vector<bool> used_;
  std::size_t target_ = 0;
  std::size_t best_chunks_ = kNone;
  std::size_t nodes_ = 0;
};

}  // namespace

BleuStats& BleuStats::operator+=(const BleuStats& other) {
  for (std::size_t n = 0; n < 4; ++n) {
    matches[n] += other.matches[n];
    totals[n] += other.totals[n];
  }
  candidate_length += other.candidate_length;
  reference_length += other.reference_length;
  return *this;
}

BleuStats bleu_stats(const Sentence& candidate, std::span<const Sentence> references) {
  if (references.empty()) throw DataError("bleu: empty reference set");
  BleuStats stats;
  stats.candidate_length = candidate.size();
  std::size_t best_len = references.front().size();
  for (const Sentence& r : references) {
    const auto diff = [&](std::size_t len) {
      return len > candidate.size() ? len - candidate.size() : candidate.size() - len;
    };
    if (diff(r.size()) < diff(best_len) || (diff(r.size()) == diff(best_len) && r.size() < best_len)) {
      best_len = r.size();
    }
  }
  stats.reference_length = best_len;
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto cand_counts = count_ngrams(candidate, n);
    std::map<Ngram, std::size_t> max_ref;
    for (const Sentence& r : references) {
      for (const auto& [g, c] : count_ngrams(r, n)) max_ref[g] = std::max(max_ref[g], c);
    }
    std::size_t matched = 0;
    std::size_t total = 0;
    for (const auto& [g, c] : cand_counts) {
      total += c;
      auto it = max_ref.find(g);
      if (it != max_ref.end()) matched += std::min(c, it->second);
    }
    stats.matches[n - 1] = matched;
    stats.totals[n - 1] = total;
  }
  return stats;
}

double bleu_from_stats(const BleuStats& stats) {
  if (stats.candidate_length == 0) return 0.0;
  double log_sum = 0.0;
  for (std::size_t n = 0; n < 4; ++n) {
    const double num = stats.matches[n] > 0 ? static_cast<double>(stats.matches[n]) : kBleuEpsilon;
    const double den = stats.totals[n] > 0 ? static_cast<double>(stats.totals[n]) : 1.0;
    log_sum += 0.25 * std::log(num / den);
  }
  const double c = static_cast<double>(stats.candidate_length);
  const double r = static_cast<double>(stats.reference_length);
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  return std::clamp(brevity * std::exp(log_sum), 0.0, 1.0);
}

double bleu4(const Sentence& candidate, std::span<const Sentence> references) {
  const BleuStats stats = bleu_stats(candidate, references);
  return bleu_from_stats(stats);
}

MeteorAlignment meteor_align(const Sentence& candidate, const Sentence& reference) {
  MeteorAlignment a;
  if (candidate.empty() || reference.empty()) return a;
  AlignmentSearch search(candidate, reference);
  std::tie(a.matches, a.chunks) = search.run();
  if (a.matches == 0) return a;
  const double m = static_cast<double>(a.matches);
  a.precision = m / static_cast<double>(candidate.size());
  a.recall = m / static_cast<double>(reference.size());
  a.fmean = (1.0 + kMeteorRecallWeight) * a.precision * a.recall /
            (a.recall + kMeteorRecallWeight * a.precision);
  a.penalty = kMeteorPenaltyWeight *
              std::pow(static_cast<double>(a.chunks) / m, kMeteorPenaltyExponent);
  a.score = a.fmean * (1.0 - a.penalty);
  return a;
}

double meteor_lite(const Sentence& candidate, std::span<const Sentence> references) {
  if (references.empty()) throw DataError("meteor: empty reference set");
  double best = 0.0;
  for (const Sentence& r : references) best = std::max(best, meteor_align(candidate, r).score);
  return best;
}

std::pair<MetricReport, MetricReport> evaluate_run(std::span<const CandidateSample> candidates,
                                                   std::span<const ReferenceSet> references) {
  std::unordered_map<std::string, const ReferenceSet*> by_id;
  for (const ReferenceSet& r : references) {
    if (!by_id.emplace(r.id, &r).second) throw DataError("evaluate_run: duplicate reference id " + r.id);
  }
  std::unordered_set<std::string> seen;
  for (const CandidateSample& c : candidates) {
    if (!seen.insert(c.id).second) throw DataError("evaluate_run: duplicate candidate id " + c.id);
    if (!by_id.contains(c.id)) throw DataError("evaluate_run: no references for id " + c.id);
  }
  if (seen.size() != by_id.size()) {
    throw DataError("evaluate_run: reference ids without a candidate");
  }

  MetricReport bleu{"bleu4", 0.0, {}, {{"max_order", "4"},
                                       {"weights", "0.25,0.25,0.25,0.25"},
                                       {"smoothing", "zero clipped counts replaced by 1e-9"},
                                       {"aggregation", "corpus n-gram counts"}}};
  MetricReport meteor{"meteor_lite", 0.0, {}, {{"matcher", "exact unigram"},
                                               {"alpha", "0.9"},
                                               {"penalty", "0.5 * (chunks / matches)^3"},
                                               {"aggregation", "mean of per-sample scores"}}};
  BleuStats pooled;
  double meteor_sum = 0.0;
  for (const CandidateSample& c : candidates) {
    const auto& refs = by_id.at(c.id)->references;
    const BleuStats s = bleu_stats(c.candidate, refs);
    pooled += s;
    bleu.per_sample.push_back({c.id, bleu_from_stats(s)});
    const double m = meteor_lite(c.candidate, refs);
    meteor.per_sample.push_back({c.id, m});
    meteor_sum += m;
  }
  bleu.corpus_score = bleu_from_stats(pooled);
  meteor.corpus_score = candidates.empty() ? 0.0 : meteor_sum / static_cast<double>(candidates.size());
  return {bleu, meteor};
}

void write_report_json(const std::filesystem::path& path, const MetricReport& report) {
  nlohmann::ordered_json j;
  j["metric"] = report.metric;
  j["corpus_score"] = report.corpus_score;
  j["parameters"] = report.parameters;
  j["per_sample"] = nlohmann::ordered_json::array();
  for (const SampleScore& s : report.per_sample) {
    j["per_sample"].push_back({{"id", s.id}, {"score", s.score}});
  }
  write_file_atomic(path, j.dump(2) + "\n");
}

void write_report_csv(const std::filesystem::path& path, const MetricReport& report) {
  std::string out = "metric,id,score\n";
  for (const SampleScore& s : report.per_sample) {
    out += report.metric + "," + s.id + "," + format_double(s.score) + "\n";
  }
  out += report.metric + ",corpus," + format_double(report.corpus_score) + "\n";
  write_file_atomic(path, out);
}

}  // namespace neurocap
