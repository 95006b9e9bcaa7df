#include <unistd.h>

#include <algorithm>
#include <unordered_map>

#include <json.hpp>

#include "commands.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/pipeline/voxels.hpp"

namespace neurocap::cli {

StagedDirectory::StagedDirectory(std::filesystem::path target) : target_(std::move(target)) {
  if (target_.filename().empty()) target_ = target_.parent_path();
  staging_ = target_;
  staging_ += ".partial-" + std::to_string(::getpid());
  std::filesystem::remove_all(staging_);
  std::filesystem::create_directories(staging_);
}

StagedDirectory::~StagedDirectory() {
  if (committed_) return;
  std::error_code ec;
  std::filesystem::remove_all(staging_, ec);
}

void StagedDirectory::commit() {
  std::filesystem::remove_all(target_);
  std::filesystem::rename(staging_, target_);
  committed_ = true;
}

std::vector<std::size_t> rows_for(const PairedDataset& ds, const std::string& split) {
  if (split == "all") {
    std::vector<std::size_t> rows(ds.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return rows;
  }
  return ds.rows_in(parse_split(split));
}

Records load_records(const RecordSource& source) {
  Records r;
  if (std::filesystem::is_directory(source.path)) {
    PairedDataset ds = load_dataset(source.path);
    std::vector<std::size_t> rows = rows_for(ds, source.split);
    if (source.ids) {
      std::unordered_map<std::uint64_t, std::size_t> where;
      for (std::size_t i = 0; i < ds.size(); ++i) where.emplace(ds.ids[i], i);
      rows.clear();
      for (std::uint64_t id : load_id_list(*source.ids)) {
        const auto it = where.find(id);
        if (it == where.end()) throw DataError("id " + std::to_string(id) + " is not in " + source.path.string());
        rows.push_back(it->second);
      }
    }
    const PairedDataset sub = ds.subset(rows);
    for (std::uint64_t id : sub.ids) r.ids.push_back(std::to_string(id));
    r.brain = sub.brain;
    r.features = sub.features;
    r.rows = std::move(rows);
    r.dataset = std::move(ds);
    return r;
  }
  if (source.ids) throw ConfigError("--ids needs a dataset directory input");
  r.brain = load_matrix(source.path);
  r.features = r.brain;
  for (std::size_t i = 0; i < r.brain.rows(); ++i) r.ids.push_back(std::to_string(i));
  return r;
}

Matrix apply_recorded_mask(const Checkpoint& ckpt, const Matrix& brain) {
  if (ckpt.config.empty()) return brain;
  const nlohmann::json config = nlohmann::json::parse(ckpt.config, nullptr, false);
  if (config.is_discarded() || !config.contains("voxel-mask-indices")) return brain;
  const std::vector<std::size_t> indices = config["voxel-mask-indices"].get<std::vector<std::size_t>>();
  const std::size_t length = config.value("voxel-mask-length", std::size_t{0});
  const VoxelMask mask = VoxelMask::from_indices(length, indices, config.value("voxel-mask-threshold", 0.0));
  if (brain.cols() != mask.length()) {
    throw DataError("brain records have " + std::to_string(brain.cols()) +
                    " voxels but the regressor was trained on a mask over " + std::to_string(mask.length()));
  }
  return apply_mask(brain, mask);
}

}  // namespace neurocap::cli
