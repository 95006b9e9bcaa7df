#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"

namespace neurocap {

/// Adam hyper-parameters plus the clipping and decay applied around it.
struct AdamConfig {
  double learning_rate = 0.001;  // a
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_threshold = 1.0;
  /// Decoupled weight decay: after the Adam update, p -= learning_rate * l2 * p.
  double l2 = 0.005;
};

/// Per-parameter Adam moments.
struct AdamState {
  Matrix m;
  Matrix v;
  std::uint64_t t = 0;
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Fresh (zero-moment) state shaped like `params`.
  static AdamState like(const Matrix& params, const AdamConfig& cfg = {});
};

struct SgdConfig {
  double learning_rate = 0.01;
  double clip_threshold = 1.0;
  double l2 = 0.005;
};

/// Throws ConfigError unless learning rate, thresholds and decay are valid.
void validate(const AdamConfig& cfg);
void validate(const SgdConfig& cfg);

/// One bias-corrected Adam update of `params` in place; increments state.t.
void adam_step(Matrix& params, const Matrix& grads, AdamState& state);

/// params <- params - lr * (grads + l2 * params). `grads` are expected to be
/// clipped already (see clip_by_global_norm); the decay term is never clipped.
void sgd_step(Matrix& params, const Matrix& grads, const SgdConfig& cfg);

/// Scales every gradient by threshold / norm when the global L2 norm over
/// all of them exceeds `threshold`. Returns the norm before clipping.
double clip_by_global_norm(std::span<Matrix> grads, double threshold);

/// Global L2 norm over a set of matrices.
double global_norm(std::span<const Matrix> grads);

/// Parameter list with matching decay flags (biases are not decayed).
struct ParameterRefs {
  std::vector<Matrix*> params;
  std::vector<bool> decay;

  void add(Matrix& p, bool apply_decay) {
    params.push_back(&p);
    decay.push_back(apply_decay);
  }
};

/// Clip, then plain SGD with decay on flagged parameters.
class SgdOptimizer {
 public:
  explicit SgdOptimizer(SgdConfig cfg);
  void step(const ParameterRefs& refs, std::span<Matrix> grads) const;
  const SgdConfig& config() const noexcept { return cfg_; }

 private:
  SgdConfig cfg_;
};

/// Clip, Adam, then decoupled decay on flagged parameters.
class AdamOptimizer {
 public:
  AdamOptimizer(AdamConfig cfg, const ParameterRefs& refs);
  void step(const ParameterRefs& refs, std::span<Matrix> grads);

  const AdamConfig& config() const noexcept { return cfg_; }
  std::vector<AdamState>& states() noexcept { return states_; }
  const std::vector<AdamState>& states() const noexcept { return states_; }

 private:
  AdamConfig cfg_;
  std::vector<AdamState> states_;
};

}  // namespace neurocap
