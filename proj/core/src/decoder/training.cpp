#include "neurocap/decoder/training.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/losses.hpp"

namespace neurocap {
namespace {

constexpr std::size_t kParamCount = 11;

// Input token at teacher-forcing step t (t = 0 reads BOS). Rows past their
// caption read EOS as padding; their targets carry zero weight.
std::vector<std::size_t> step_inputs(std::span<const TokenSequence> captions, std::size_t t) {
  std::vector<std::size_t> ids(captions.size(), Vocabulary::kEos);
  for (std::size_t r = 0; r < captions.size(); ++r) {
    if (t == 0) {
      ids[r] = Vocabulary::kBos;
    } else if (t - 1 < captions[r].size()) {
      ids[r] = captions[r][t - 1];
    }
  }
  return ids;
}

void step_targets(std::span<const TokenSequence> captions, std::size_t t,
                  std::vector<std::size_t>& targets, std::vector<double>& weights) {
  targets.assign(captions.size(), 0);
  weights.assign(captions.size(), 0.0);
  for (std::size_t r = 0; r < captions.size(); ++r) {
    const std::size_t len = captions[r].size();
    if (t < len) {
      targets[r] = captions[r][t];
      weights[r] = 1.0;
    } else if (t == len) {
      targets[r] = Vocabulary::kEos;
      weights[r] = 1.0;
    }
  }
}

std::size_t longest(std::span<const TokenSequence> captions) {
  std::size_t n = 0;
  for (const TokenSequence& c : captions) n = std::max(n, c.size());
  return n;
}

std::size_t token_count(std::span<const TokenSequence> captions) {
  std::size_t n = 0;
  for (const TokenSequence& c : captions) n += c.size() + 1;
  return n;
}

void require_batch(const LanguageModel& model, const Matrix& features,
                   std::span<const TokenSequence> captions) {
  if (features.rows() != captions.size()) {
    throw ShapeError("language model batch: " + std::to_string(features.rows()) +
                     " features for " + std::to_string(captions.size()) + " captions");
  }
  if (features.cols() != model.feature_dim()) {
    throw ShapeError("language model batch: features have " + std::to_string(features.cols()) +
                     " columns, model expects " + std::to_string(model.feature_dim()));
  }
}

}  // namespace

void validate_captions(const LanguageModel& model, std::span<const TokenSequence> captions) {
  for (std::size_t i = 0; i < captions.size(); ++i) {
    for (TokenId t : captions[i]) {
      if (t >= model.vocab_size() || t == Vocabulary::kBos || t == Vocabulary::kEos) {
        throw DataError("caption " + std::to_string(i) + " has invalid token index " +
                        std::to_string(t));
      }
    }
  }
}

Var record_lm_loss(Tape& tape, const LanguageModel& model, std::span<const Var> params,
                   const Matrix& features, std::span<const TokenSequence> captions) {
  if (params.size() != kParamCount) throw ShapeError("record_lm_loss: expected 11 parameters");
  require_batch(model, features, captions);
  if (captions.empty()) throw DataError("record_lm_loss: empty batch");
  const Var embedding = params[0];
  const Var out_weight = params[9];
  const Var out_bias = params[10];
  const std::size_t batch = captions.size();
  const std::size_t hd = model.hidden_dim();

  std::array<Var, 2> h{tape.constant(Matrix(batch, hd)), tape.constant(Matrix(batch, hd))};
  std::array<Var, 2> c{h[0], h[1]};
  auto advance = [&](Var x) {
    std::tie(h[0], c[0]) = model.lstm[0].record(tape, x, h[0], c[0], params[3], params[4], params[5]);
    std::tie(h[1], c[1]) = model.lstm[1].record(tape, h[0], h[1], c[1], params[6], params[7], params[8]);
  };

  advance(tape.add_row(tape.matmul(tape.constant(features), params[1]), params[2]));

  const double total = static_cast<double>(token_count(captions));
  const std::size_t steps = longest(captions) + 1;
  std::vector<std::size_t> targets;
  std::vector<double> weights;
  Var loss{};
  for (std::size_t t = 0; t < steps; ++t) {
    const std::vector<std::size_t> ids = step_inputs(captions, t);
    advance(tape.gather_rows(embedding, ids));
    const Var logits = tape.add_row(tape.matmul(h[1], out_weight), out_bias);
    step_targets(captions, t, targets, weights);
    double active = 0.0;
    for (double w : weights) active += w;
    const Var step_loss = tape.scale(tape.softmax_cross_entropy(logits, targets, weights),
                                     active / total);
    loss = t == 0 ? step_loss : tape.add(loss, step_loss);
  }
  return loss;
}

double mean_token_nll(const LanguageModel& model, const Matrix& features,
                      std::span<const TokenSequence> captions, std::size_t batch_size) {
  require_batch(model, features, captions);
  validate_captions(model, captions);
  if (captions.empty()) throw DataError("mean_token_nll: empty corpus");
  if (batch_size == 0) batch_size = captions.size();
  const std::size_t hd = model.hidden_dim();
  double nll = 0.0;
  std::vector<std::size_t> targets;
  std::vector<double> weights;
  for (std::size_t start = 0; start < captions.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, captions.size() - start);
    const auto batch = captions.subspan(start, count);
    std::array<Matrix, 2> h{Matrix(count, hd), Matrix(count, hd)};
    std::array<Matrix, 2> c{h[0], h[1]};
    auto advance = [&](const Matrix& x) {
      model.lstm[0].step(x, h[0], c[0]);
      model.lstm[1].step(h[0], h[1], c[1]);
    };
    advance(affine(features.row_block(start, count), model.feature_proj, model.feature_bias));
    const std::size_t steps = longest(batch) + 1;
    for (std::size_t t = 0; t < steps; ++t) {
      advance(model.embedding.select_rows(step_inputs(batch, t)));
      const Matrix log_probs = log_softmax_rows(affine(h[1], model.out_weight, model.out_bias));
      step_targets(batch, t, targets, weights);
      for (std::size_t r = 0; r < count; ++r) {
        if (weights[r] > 0.0) nll -= log_probs(r, targets[r]);
      }
    }
  }
  return nll / static_cast<double>(token_count(captions));
}

double perplexity(const LanguageModel& model, const Matrix& features,
                  std::span<const TokenSequence> captions) {
  return std::exp(mean_token_nll(model, features, captions));
}

LmTrainer::LmTrainer(LanguageModel model, AdamConfig cfg, std::uint64_t seed,
                     LmTrainOptions options)
    : model_(std::move(model)),
      optimizer_(cfg, refs()),
      seed_(seed),
      options_(options) {
  model_.validate();
  if (options_.batch_size == 0) throw ConfigError("LmTrainer: batch size must be >= 1");
}

LmTrainer::LmTrainer(LanguageModel model, AdamConfig cfg, std::vector<AdamState> states,
                     std::size_t next_epoch, std::uint64_t seed, LmTrainOptions options)
    : LmTrainer(std::move(model), cfg, seed, options) {
  const ParameterRefs r = refs();
  if (states.size() != r.params.size()) {
    throw ShapeError("LmTrainer: optimizer state count does not match parameters");
  }
  for (std::size_t i = 0; i < states.size(); ++i) {
    require_same_shape(*r.params[i], states[i].m, "LmTrainer: restored first moment");
    require_same_shape(*r.params[i], states[i].v, "LmTrainer: restored second moment");
  }
  optimizer_.states() = std::move(states);
  next_epoch_ = next_epoch;
}

ParameterRefs LmTrainer::refs() {
  ParameterRefs r;
  for (auto& [name, m] : model_.named_parameters()) {
    const bool is_bias = name.ends_with("bias");
    r.add(*m, !is_bias);
  }
  return r;
}

LmEpochRecord LmTrainer::run_epoch(const Matrix& features, std::span<const TokenSequence> captions) {
  require_batch(model_, features, captions);
  validate_captions(model_, captions);
  if (captions.empty()) throw DataError("LmTrainer: empty corpus");
  const ParameterRefs r = refs();
  const std::size_t epoch = next_epoch_;
  const std::vector<std::size_t> order = epoch_order(captions.size(), seed_, epoch);
  const double total = static_cast<double>(token_count(captions));
  double weighted_loss = 0.0;
  for (std::size_t start = 0; start < order.size(); start += options_.batch_size) {
    const std::size_t count = std::min(options_.batch_size, order.size() - start);
    const std::span<const std::size_t> idx(order.data() + start, count);
    std::vector<TokenSequence> batch;
    batch.reserve(count);
    for (std::size_t i : idx) batch.push_back(captions[i]);

    Tape tape;
    std::vector<Var> params;
    for (Matrix* p : r.params) params.push_back(tape.variable(*p));
    const Var loss = record_lm_loss(tape, model_, params, features.select_rows(idx), batch);
    const double value = tape.value(loss)(0, 0);
    if (!std::isfinite(value)) {
      throw NumericError("language model training diverged at epoch " + std::to_string(epoch));
    }
    tape.backward(loss);
    std::vector<Matrix> grads;
    grads.reserve(params.size());
    for (Var p : params) grads.push_back(tape.grad(p));
    optimizer_.step(r, grads);
    weighted_loss += value * static_cast<double>(token_count(batch)) / total;
  }
  ++next_epoch_;
  LmEpochRecord rec;
  rec.epoch = epoch;
  rec.train_loss = weighted_loss;
  rec.perplexity = perplexity(model_, features, captions);
  if (!std::isfinite(rec.perplexity)) {
    throw NumericError("language model perplexity is not finite at epoch " + std::to_string(epoch));
  }
  return rec;
}

std::vector<LmEpochRecord> LmTrainer::train(const Matrix& features,
                                            std::span<const TokenSequence> captions,
                                            std::size_t epochs) {
  std::vector<LmEpochRecord> log;
  log.reserve(epochs);
  for (std::size_t e = 0; e < epochs; ++e) log.push_back(run_epoch(features, captions));
  return log;
}

LmFit train_lm(const Matrix& features, std::span<const TokenSequence> captions,
               LanguageModel model, const AdamConfig& cfg, std::size_t epochs,
               std::uint64_t seed, const LmTrainOptions& options) {
  validate_captions(model, captions);
  LmTrainer trainer(std::move(model), cfg, seed, options);
  LmFit fit;
  fit.log = trainer.train(features, captions, epochs);
  fit.model = std::move(trainer).release();
  return fit;
}

}  // namespace neurocap
