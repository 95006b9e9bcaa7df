#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "neurocap/mathcore/tape.hpp"
#include "neurocap/optim/optim.hpp"
#include "neurocap/persist/checkpoint.hpp"

namespace neurocap::cli {

/// Resolved settings for one `train` run.
///
/// The config file is TOML. Top-level keys apply to every model kind; a
/// table named after the kind ([ridge], [mlp3], [dnn5], [ae], [lm]) overrides
/// them for that kind only. Unknown keys, and keys a kind does not use inside
/// its own table, are rejected. Relative paths resolve against the config
/// file's directory.
struct TrainSettings {
  ModelKind kind = ModelKind::ridge;

  std::filesystem::path dataset;
  std::optional<std::filesystem::path> output;
  std::uint64_t seed = 0;
  bool standardize = true;
  std::optional<std::filesystem::path> voxel_mask;
  std::size_t batch_size = 32;

  // Regressors and autoencoder.
  double learning_rate = 0.01;
  double clip_threshold = 1.0;
  double l2 = 0.005;  ///< 0.5 for ridge
  std::size_t epochs = 1000;  ///< 100 for lm
  std::size_t pretraining_epochs = 200;
  /// Full layer widths, e.g. {65665, 8000, 4096}; for lm a single width.
  std::vector<std::size_t> units;
  Activation activation = Activation::relu;
  /// "scaled-normal", "std-normal", or an ae checkpoint path (dnn5). Empty
  /// for dnn5 means stacked-autoencoder pretraining inside the run.
  std::string initial_parameters;

  // Language model.
  AdamConfig adam;
  std::size_t min_count = 50;
  std::optional<std::filesystem::path> word_embedding;

  /// Directory of the config file; recorded paths are relative to it.
  std::filesystem::path base;

  SgdConfig sgd() const;
  AdamConfig adam_config() const;
  /// Every resolved value, for summaries and checkpoint records.
  nlohmann::ordered_json to_json() const;
};

/// Throws ConfigError on unknown keys, wrong types, out-of-range values or
/// TOML syntax errors.
TrainSettings load_train_settings(const std::filesystem::path& file, ModelKind kind);

/// Default settings for `kind` (used when the file omits a key).
TrainSettings default_settings(ModelKind kind);

}  // namespace neurocap::cli
