#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "neurocap/decoder/vocabulary.hpp"
#include "neurocap/mathcore/matrix.hpp"

namespace neurocap {

enum class Split { train, test, unlabeled };

std::string_view to_string(Split s);
Split parse_split(std::string_view s);

/// Aligned (brain record, feature vector, optional caption) triples.
/// Row i of `brain` and `features` belongs to ids[i].
struct PairedDataset {
  std::vector<std::uint64_t> ids;
  Matrix brain;     ///< n x brain_dim
  Matrix features;  ///< n x feature_dim
  std::vector<std::optional<Sentence>> captions;
  std::vector<Split> splits;
  std::string provenance;  ///< "synth seed=..." or a source path
  std::optional<std::uint64_t> seed;

  std::size_t size() const noexcept { return ids.size(); }
  std::size_t brain_dim() const noexcept { return brain.cols(); }
  std::size_t feature_dim() const noexcept { return features.cols(); }

  /// Throws DataError on misaligned rows, duplicate ids or bad captions.
  void validate() const;
  /// Row indices carrying the given split label, ascending.
  std::vector<std::size_t> rows_in(Split s) const;
  /// Rows of every split except `unlabeled` that have a caption.
  std::vector<std::size_t> captioned_rows(Split s) const;
  PairedDataset subset(std::span<const std::size_t> rows) const;

  friend bool operator==(const PairedDataset&, const PairedDataset&) = default;
};

/// Seed-deterministic disjoint split of all rows. The first
/// round(fraction * n) rows of a seeded permutation form the training part.
/// Throws ConfigError unless 0 < fraction < 1.
std::pair<PairedDataset, PairedDataset> split(const PairedDataset& ds, double train_fraction,
                                              std::uint64_t seed);

/// Relabels the non-unlabeled rows train/test in place with the same rule.
void assign_split(PairedDataset& ds, double train_fraction, std::uint64_t seed);

/// Directory layout: brain.ncmx, features.ncmx, captions.jsonl
/// ({"id", "feature_ref", "tokens"} per line) and meta.json.
void save_dataset(const PairedDataset& ds, const std::filesystem::path& dir);
PairedDataset load_dataset(const std::filesystem::path& dir);

/// Ids, one per line (e.g. a curated evaluation list).
std::vector<std::uint64_t> load_id_list(const std::filesystem::path& path);

}  // namespace neurocap
