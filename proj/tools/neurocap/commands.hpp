#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "neurocap/data/dataset.hpp"
#include "neurocap/persist/checkpoint.hpp"

namespace neurocap::cli {

struct SynthOptions {
  std::filesystem::path out;
  std::uint64_t seed = 0;
  std::optional<std::string> preset;
  std::optional<std::size_t> n_train;
  std::optional<std::size_t> n_unlabeled;
  std::optional<std::size_t> brain_dim;
  std::optional<std::size_t> feature_dim;
  std::optional<double> noise_std;
  std::optional<std::size_t> clusters;
  std::optional<double> cluster_spread;
  std::optional<std::size_t> templates;
  std::optional<double> ar1;
  double train_fraction = 0.8;
};

struct TrainOptions {
  ModelKind kind = ModelKind::ridge;
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> init;
  std::optional<std::filesystem::path> resume;
  bool paper_init = false;
};

/// Where decode and retrieve read their input records from.
struct RecordSource {
  std::filesystem::path path;  ///< dataset directory or .ncmx matrix
  std::string split = "test";  ///< dataset rows: train, test, unlabeled or all
  std::optional<std::filesystem::path> ids;  ///< optional id list restricting the rows
};

struct DecodeOptions {
  RecordSource input;
  std::optional<std::filesystem::path> regressor;
  std::filesystem::path lm;
  bool from_features = false;
  std::optional<std::size_t> beam;
  std::size_t max_len = 20;
  bool allow_unk = false;
  std::filesystem::path out;
};

struct RetrieveOptions {
  RecordSource queries;
  std::filesystem::path db;
  std::optional<std::filesystem::path> regressor;
  std::size_t k = 3;
  std::filesystem::path out;
};

struct EvalOptions {
  std::filesystem::path candidates;
  std::optional<std::filesystem::path> references;
  std::optional<std::filesystem::path> dataset;
  std::optional<std::filesystem::path> pseudo_lm;
  std::size_t width = 10;
  std::size_t max_len = 20;
  std::optional<std::filesystem::path> ids;
  std::filesystem::path out;
};

struct MaskOptions {
  std::filesystem::path scores;
  double threshold = 0.0;
  std::filesystem::path out;
};

struct ReportOptions {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out;
};

void run_synth(const SynthOptions& o);
void run_train(const TrainOptions& o);
void run_decode(const DecodeOptions& o);
void run_retrieve(const RetrieveOptions& o);
void run_eval(const EvalOptions& o);
void run_mask(const MaskOptions& o);
void run_report(const ReportOptions& o);

/// Output directory built under a sibling staging name and renamed into
/// place by commit(); removed on destruction if never committed.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path target);
  ~StagedDirectory();
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  const std::filesystem::path& path() const noexcept { return staging_; }
  std::filesystem::path operator/(const std::string& name) const { return staging_ / name; }
  void commit();

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

/// Input rows selected by a RecordSource, with string ids for reports.
struct Records {
  std::vector<std::string> ids;
  Matrix brain;     ///< empty when the source has no brain data
  Matrix features;  ///< empty when the source has no features
  std::optional<PairedDataset> dataset;  ///< set for dataset-directory sources
  std::vector<std::size_t> rows;         ///< dataset rows, when set
};

/// A dataset directory yields its brain and feature rows; an .ncmx matrix is
/// returned as `brain` and `features` both, ids being row numbers.
Records load_records(const RecordSource& source);

/// Dataset rows in the named split ("all" for every row).
std::vector<std::size_t> rows_for(const PairedDataset& ds, const std::string& split);

/// Applies a voxel mask recorded in a regressor checkpoint's config, if any.
Matrix apply_recorded_mask(const Checkpoint& ckpt, const Matrix& brain);

}  // namespace neurocap::cli
