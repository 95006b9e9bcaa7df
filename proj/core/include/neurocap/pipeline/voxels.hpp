#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"

namespace neurocap {

/// Selection over voxel indices produced by a score threshold.
struct VoxelMask {
  std::vector<bool> selected;
  double threshold = 0.0;
  std::size_t count = 0;  ///< number of true entries

  std::size_t length() const noexcept { return selected.size(); }
  /// Selected indices in ascending order.
  std::vector<std::size_t> indices() const;
  /// Builds a mask of `length` voxels from sorted, unique indices.
  static VoxelMask from_indices(std::size_t length, std::span<const std::size_t> indices,
                                double threshold);
};

/// Selects voxels whose score is strictly greater than `threshold`.
/// Throws NumericError on a NaN threshold or non-finite score.
VoxelMask select_voxels(std::span<const double> scores, double threshold);

/// Keeps the selected columns of every row, in index order.
Matrix apply_mask(const Matrix& x, const VoxelMask& mask);
std::vector<double> apply_mask(std::span<const double> x, const VoxelMask& mask);

/// CSV with rows "index,score" (an optional header line is skipped); every
/// index in [0, n) must appear exactly once.
std::vector<double> load_scores(const std::filesystem::path& path);
void save_scores(const std::filesystem::path& path, std::span<const double> scores);

/// Sorted index list, one per line, after a "# voxels=N threshold=T" line.
void save_mask(const std::filesystem::path& path, const VoxelMask& mask);
VoxelMask load_mask(const std::filesystem::path& path);

}  // namespace neurocap
