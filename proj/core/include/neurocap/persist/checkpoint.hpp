#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "neurocap/decoder/language_model.hpp"
#include "neurocap/decoder/training.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/optim/optim.hpp"
#include "neurocap/regressors/autoencoder.hpp"
#include "neurocap/regressors/mlp.hpp"
#include "neurocap/regressors/regressor.hpp"
#include "neurocap/regressors/ridge.hpp"

namespace neurocap {

/// Checkpoint load failures. All derive from DataError.
class PersistError : public DataError {
 public:
  using DataError::DataError;
};
class VersionError : public PersistError {
 public:
  using PersistError::PersistError;
};
class ChecksumError : public PersistError {
 public:
  using PersistError::PersistError;
};
class KindError : public PersistError {
 public:
  using PersistError::PersistError;
};

inline constexpr std::string_view kCheckpointMagic = "NCCK";
inline constexpr std::uint32_t kCheckpointVersion = 1;

enum class ModelKind : std::uint32_t { ridge = 0, mlp3 = 1, dnn5 = 2, lm = 3, ae = 4 };

std::string_view to_string(ModelKind kind);
/// Throws ConfigError on an unknown name.
ModelKind parse_model_kind(std::string_view name);

/// Optimizer state needed to continue language-model training exactly.
struct LmResumeState {
  AdamConfig config;
  std::vector<AdamState> states;
  std::size_t next_epoch = 0;
  std::uint64_t seed = 0;
  LmTrainOptions options;
};

using CheckpointModel = std::variant<RidgeModel, MlpModel, AutoencoderStack, LanguageModel>;

struct Checkpoint {
  ModelKind kind = ModelKind::ridge;
  CheckpointModel model;
  /// Free-form training-config record (JSON text), stored verbatim.
  std::string config;
  /// Epoch to continue from for resumable SGD runs.
  std::optional<std::size_t> next_epoch;
  std::optional<LmResumeState> lm_resume;
};

/// Atomic write (temporary file, then rename). Throws KindError if the kind
/// tag does not fit the model (mlp3 needs 3 widths, dnn5 needs 5).
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
std::string encode_checkpoint(const Checkpoint& ckpt);

/// Throws VersionError, ChecksumError or KindError for the respective
/// failure and DataError for any other malformation.
Checkpoint load_checkpoint(const std::filesystem::path& path);
Checkpoint decode_checkpoint(std::string_view bytes, const std::string& source);
/// As above, additionally requiring `expected` as the kind tag.
Checkpoint load_checkpoint(const std::filesystem::path& path, ModelKind expected);

/// Loads a ridge, mlp3 or dnn5 checkpoint as a regressor.
Regressor load_regressor(const std::filesystem::path& path);

/// CRC-64/XZ (ECMA-182 polynomial, reflected, all-ones init and xor-out).
std::uint64_t crc64(std::string_view bytes);

}  // namespace neurocap
