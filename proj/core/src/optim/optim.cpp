#include "neurocap/optim/optim.hpp"

#include <cmath>
#include <string>

#include "neurocap/errors.hpp"

namespace neurocap {

AdamState AdamState::like(const Matrix& params, const AdamConfig& cfg) {
  AdamState s;
  s.m = Matrix(params.rows(), params.cols());
  s.v = Matrix(params.rows(), params.cols());
  s.learning_rate = cfg.learning_rate;
  s.beta1 = cfg.beta1;
  s.beta2 = cfg.beta2;
  s.eps = cfg.eps;
  return s;
}

void validate(const AdamConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("adam: learning rate must be > 0");
  if (!(cfg.beta1 >= 0.0 && cfg.beta1 < 1.0)) throw ConfigError("adam: b1 must be in [0, 1)");
  if (!(cfg.beta2 >= 0.0 && cfg.beta2 < 1.0)) throw ConfigError("adam: b2 must be in [0, 1)");
  if (!(cfg.eps > 0.0)) throw ConfigError("adam: eps must be > 0");
  if (!(cfg.clip_threshold > 0.0)) throw ConfigError("adam: clip threshold must be > 0");
  if (!(cfg.l2 >= 0.0)) throw ConfigError("adam: l2 must be >= 0");
}

void validate(const SgdConfig& cfg) {
  if (!(cfg.learning_rate > 0.0)) throw ConfigError("sgd: learning rate must be > 0");
  if (!(cfg.clip_threshold > 0.0)) throw ConfigError("sgd: clip threshold must be > 0");
  if (!(cfg.l2 >= 0.0)) throw ConfigError("sgd: l2 must be >= 0");
}

void adam_step(Matrix& params, const Matrix& grads, AdamState& state) {
  require_same_shape(params, grads, "adam_step");
  require_same_shape(params, state.m, "adam_step (first moment)");
  require_same_shape(params, state.v, "adam_step (second moment)");
  require_finite(grads, "adam_step");
  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  auto p = params.values();
  auto g = grads.values();
  auto m = state.m.values();
  auto v = state.v.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
    v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    p[i] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void sgd_step(Matrix& params, const Matrix& grads, const SgdConfig& cfg) {
  require_same_shape(params, grads, "sgd_step");
  require_finite(grads, "sgd_step");
  auto p = params.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] -= cfg.learning_rate * (g[i] + cfg.l2 * p[i]);
  }
}

double global_norm(std::span<const Matrix> grads) {
  double total = 0.0;
  for (const Matrix& g : grads) total += squared_norm(g);
  return std::sqrt(total);
}

double clip_by_global_norm(std::span<Matrix> grads, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("clip_by_global_norm: threshold must be > 0");
  for (const Matrix& g : grads) require_finite(g, "clip_by_global_norm");
  const double norm = global_norm(grads);
  if (norm > threshold) {
    const double s = threshold / norm;
    for (Matrix& g : grads)
      for (double& v : g.values()) v *= s;
  }
  return norm;
}

SgdOptimizer::SgdOptimizer(SgdConfig cfg) : cfg_(cfg) { validate(cfg_); }

void SgdOptimizer::step(const ParameterRefs& refs, std::span<Matrix> grads) const {
  if (grads.size() != refs.params.size()) throw ShapeError("SgdOptimizer: gradient count");
  clip_by_global_norm(grads, cfg_.clip_threshold);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    SgdConfig local = cfg_;
    if (!refs.decay[i]) local.l2 = 0.0;
    sgd_step(*refs.params[i], grads[i], local);
  }
}

AdamOptimizer::AdamOptimizer(AdamConfig cfg, const ParameterRefs& refs) : cfg_(cfg) {
  validate(cfg_);
  states_.reserve(refs.params.size());
  for (const Matrix* p : refs.params) states_.push_back(AdamState::like(*p, cfg_));
}

void AdamOptimizer::step(const ParameterRefs& refs, std::span<Matrix> grads) {
  if (grads.size() != refs.params.size() || states_.size() != grads.size()) {
    throw ShapeError("AdamOptimizer: gradient count");
  }
  clip_by_global_norm(grads, cfg_.clip_threshold);
  const double shrink = cfg_.learning_rate * cfg_.l2;
  for (std::size_t i = 0; i < grads.size(); ++i) {
    adam_step(*refs.params[i], grads[i], states_[i]);
    if (refs.decay[i] && shrink > 0.0) {
      for (double& v : refs.params[i]->values()) v -= shrink * v;
    }
  }
}

}  // namespace neurocap
