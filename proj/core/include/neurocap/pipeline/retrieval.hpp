#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"

namespace neurocap {

/// Id-indexed feature vectors of uniform width, e.g. an image collection.
class FeatureDatabase {
 public:
  FeatureDatabase() = default;
  /// One row of `features` per id; `sources` is empty or one per id.
  /// Throws DataError on duplicate ids or count mismatches.
  FeatureDatabase(std::vector<std::uint64_t> ids, Matrix features,
                  std::vector<std::string> sources = {});
  /// Ids 0..rows-1.
  static FeatureDatabase from_matrix(Matrix features);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return features_.cols(); }
  const std::vector<std::uint64_t>& ids() const noexcept { return ids_; }
  const Matrix& features() const noexcept { return features_; }
  const std::vector<std::string>& sources() const noexcept { return sources_; }

 private:
  std::vector<std::uint64_t> ids_;
  Matrix features_;
  std::vector<std::string> sources_;
};

struct Neighbor {
  std::uint64_t id = 0;
  double mse = 0.0;
};

/// Mean squared distance between two equal-length vectors.
double mean_squared_distance(std::span<const double> a, std::span<const double> b);

/// Exact k nearest neighbours by mean squared distance, ascending, ties by
/// id. Returns min(k, db.size()) entries.
std::vector<Neighbor> retrieve_similar(std::span<const double> query, const FeatureDatabase& db,
                                       std::size_t k);

/// "NCFD", u32 version, u64 count, u64 dim, then per record: u64 id,
/// length-prefixed source string, and a 1 x dim NCMX block.
void save_feature_database(const std::filesystem::path& path, const FeatureDatabase& db);
FeatureDatabase load_feature_database(const std::filesystem::path& path);

}  // namespace neurocap
