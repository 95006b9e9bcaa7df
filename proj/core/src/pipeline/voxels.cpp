#include "neurocap/pipeline/voxels.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"

namespace neurocap {
namespace {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<std::size_t> VoxelMask::indices() const {
  std::vector<std::size_t> out;
  out.reserve(count);
  for (std::size_t i = 0; i < selected.size(); ++i)
    if (selected[i]) out.push_back(i);
  return out;
}

VoxelMask VoxelMask::from_indices(std::size_t length, std::span<const std::size_t> indices,
                                  double threshold) {
  VoxelMask mask;
  mask.selected.assign(length, false);
  mask.threshold = threshold;
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= length) {
      throw DataError("voxel mask index " + std::to_string(indices[k]) + " out of range");
    }
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw DataError("voxel mask indices must be sorted and unique");
    }
    mask.selected[indices[k]] = true;
  }
  mask.count = indices.size();
  return mask;
}

VoxelMask select_voxels(std::span<const double> scores, double threshold) {
  if (std::isnan(threshold)) throw NumericError("select_voxels: threshold is NaN");
  VoxelMask mask;
  mask.threshold = threshold;
  mask.selected.resize(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw NumericError("select_voxels: score " + std::to_string(i) + " is not finite");
    }
    mask.selected[i] = scores[i] > threshold;
    if (mask.selected[i]) ++mask.count;
  }
  return mask;
}

Matrix apply_mask(const Matrix& x, const VoxelMask& mask) {
  if (x.cols() != mask.length()) {
    throw ShapeError("apply_mask: record has " + std::to_string(x.cols()) +
                     " voxels, mask covers " + std::to_string(mask.length()));
  }
  const std::vector<std::size_t> idx = mask.indices();
  Matrix out(x.rows(), idx.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto src = x.row(r);
    auto dst = out.row(r);
    for (std::size_t k = 0; k < idx.size(); ++k) dst[k] = src[idx[k]];
  }
  return out;
}

std::vector<double> apply_mask(std::span<const double> x, const VoxelMask& mask) {
  const Matrix out = apply_mask(Matrix::row_vector(x), mask);
  return {out.values().begin(), out.values().end()};
}

std::vector<double> load_scores(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::pair<std::size_t, double>> rows;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected index,score");
    }
    std::size_t index = 0;
    double score = 0.0;
    const char* b = line.data();
    const auto r1 = std::from_chars(b, b + comma, index);
    const auto r2 = std::from_chars(b + comma + 1, b + line.size(), score);
    if (r1.ec != std::errc{} || r1.ptr != b + comma || r2.ec != std::errc{} ||
        r2.ptr != b + line.size()) {
      if (line_no == 1) continue;  // header
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
    rows.emplace_back(index, score);
  }
  std::vector<double> scores(rows.size(), std::nan(""));
  std::vector<bool> seen(rows.size(), false);
  for (const auto& [index, score] : rows) {
    if (index >= rows.size() || seen[index]) {
      throw DataError(path.string() + ": voxel indices must cover 0.." +
                      std::to_string(rows.size() - 1) + " exactly once");
    }
    seen[index] = true;
    scores[index] = score;
  }
  return scores;
}

void save_scores(const std::filesystem::path& path, std::span<const double> scores) {
  std::string out = "index,score\n";
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out += std::to_string(i) + "," + format_double(scores[i]) + "\n";
  }
  write_file_atomic(path, out);
}

void save_mask(const std::filesystem::path& path, const VoxelMask& mask) {
  std::string out = "# voxels=" + std::to_string(mask.length()) +
                    " threshold=" + format_double(mask.threshold) + "\n";
  for (std::size_t i : mask.indices()) out += std::to_string(i) + "\n";
  write_file_atomic(path, out);
}

VoxelMask load_mask(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty mask file");
  std::size_t length = 0;
  double threshold = 0.0;
  {
    std::istringstream header(line);
    std::string hash, voxels, thresh;
    header >> hash >> voxels >> thresh;
    if (hash != "#" || !voxels.starts_with("voxels=") || !thresh.starts_with("threshold=")) {
      throw DataError(path.string() + ": missing \"# voxels=N threshold=T\" header");
    }
    try {
      length = std::stoull(voxels.substr(7));
      threshold = std::stod(thresh.substr(10));
    } catch (const std::exception&) {
      throw DataError(path.string() + ": malformed mask header");
    }
  }
  std::vector<std::size_t> idx;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t v = 0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (res.ec != std::errc{} || res.ptr != line.data() + line.size()) {
      throw DataError(path.string() + ": malformed index \"" + line + "\"");
    }
    idx.push_back(v);
  }
  return VoxelMask::from_indices(length, idx, threshold);
}

}  // namespace neurocap
