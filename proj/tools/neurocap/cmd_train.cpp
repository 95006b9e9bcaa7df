#include <charconv>
#include <cmath>
#include <iostream>

#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "neurocap/decoder/training.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/mathcore/losses.hpp"
#include "neurocap/pipeline/voxels.hpp"
#include "neurocap/regressors/autoencoder.hpp"

namespace neurocap::cli {
namespace {

using json = nlohmann::ordered_json;

std::string number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

// Long-format training log: one row per (epoch, split, metric).
class TrainingLog {
 public:
  void add(std::size_t epoch, std::string_view split, std::string_view metric, double value) {
    if (std::isnan(value)) return;
    text_ += std::to_string(epoch) + "," + std::string(split) + "," + std::string(metric) + "," + number(value) + "\n";
  }
  void add_fit(const TrainLog& log, std::size_t first_epoch) {
    if (first_epoch == 0) {
      add(0, "train", "mse", log.initial_train_mse);
      add(0, "test", "mse", log.initial_val_mse);
    }
    for (const EpochRecord& r : log.epochs) {
      add(r.epoch + 1, "train", "loss", r.train_loss);
      add(r.epoch + 1, "train", "mse", r.train_mse);
      add(r.epoch + 1, "test", "mse", r.val_mse);
    }
  }
  void add_pretraining(const AutoencoderStack& stack) {
    for (std::size_t layer = 0; layer < stack.loss_curves.size(); ++layer) {
      const std::string split = "pretrain-layer" + std::to_string(layer + 1);
      for (std::size_t e = 0; e < stack.loss_curves[layer].size(); ++e) {
        add(e + 1, split, "reconstruction-mse", stack.loss_curves[layer][e]);
      }
    }
  }
  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_ = "epoch,split,metric,value\n";
};

struct Prepared {
  PairedDataset ds;
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  Matrix brain;  ///< every row, masked
  json record;   ///< settings plus mask, stored in the checkpoint
};

Prepared prepare(const TrainSettings& s) {
  Prepared p;
  p.ds = load_dataset(s.dataset);
  p.train_rows = p.ds.rows_in(Split::train);
  p.test_rows = p.ds.rows_in(Split::test);
  p.record = s.to_json();
  p.brain = p.ds.brain;
  if (s.voxel_mask) {
    const VoxelMask mask = load_mask(*s.voxel_mask);
    if (mask.length() != p.ds.brain_dim()) {
      throw DataError(s.voxel_mask->string() + ": mask covers " + std::to_string(mask.length()) +
                      " voxels, dataset has " + std::to_string(p.ds.brain_dim()));
    }
    p.brain = apply_mask(p.ds.brain, mask);
    p.record["voxel-mask-length"] = mask.length();
    p.record["voxel-mask-threshold"] = mask.threshold;
    p.record["voxel-mask-indices"] = mask.indices();
  }
  return p;
}

std::vector<std::size_t> resolve_arch(const TrainSettings& s, std::size_t in, std::size_t out,
                                      const std::vector<std::size_t>& default_hidden) {
  if (s.units.empty()) {
    std::vector<std::size_t> arch{in};
    arch.insert(arch.end(), default_hidden.begin(), default_hidden.end());
    arch.push_back(out);
    return arch;
  }
  if (s.units.size() != default_hidden.size() + 2) {
    throw ConfigError("units-per-layer for " + std::string(to_string(s.kind)) + " needs " +
                      std::to_string(default_hidden.size() + 2) + " widths");
  }
  if (s.units.front() != in || s.units.back() != out) {
    throw DataError("units-per-layer runs " + std::to_string(s.units.front()) + " -> " +
                    std::to_string(s.units.back()) + " but the data is " + std::to_string(in) + " -> " +
                    std::to_string(out));
  }
  return s.units;
}

InitScheme init_scheme(const TrainSettings& s, bool paper_init) {
  return paper_init || s.initial_parameters == "std-normal" ? InitScheme::standard_normal
                                                          : InitScheme::scaled_normal;
}

double mse_of(const Regressor& model, const Matrix& x, const Matrix& y) {
  if (x.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
  return mse_loss(predict(model, x), y).loss;
}

void require_rows(const std::vector<std::size_t>& rows, const std::string& what) {
  if (rows.empty()) throw DataError("dataset has no " + what + " rows");
}

struct Outcome {
  Checkpoint ckpt;
  json summary;
  std::optional<Checkpoint> pretrained;
};

Outcome train_ridge(const TrainSettings& s, Prepared& p, TrainingLog& log) {
  require_rows(p.train_rows, "train");
  const Matrix x = p.brain.select_rows(p.train_rows);
  const Matrix y = p.ds.features.select_rows(p.train_rows);
  RidgeModel model = ridge_fit(x, y, {.lambda = s.l2, .fit_intercept = true, .standardize = s.standardize});
  const Regressor reg = model;
  const double train = mse_of(reg, x, y);
  const double test = mse_of(reg, p.brain.select_rows(p.test_rows), p.ds.features.select_rows(p.test_rows));
  log.add(0, "train", "mse", train);
  log.add(0, "test", "mse", test);
  Outcome o{{ModelKind::ridge, std::move(model), p.record.dump(), std::nullopt, std::nullopt}, {}, {}};
  o.summary["final_train_mse"] = train;
  o.summary["final_test_mse"] = finite_or_null(test);
  return o;
}

MlpOptions mlp_options(const TrainSettings& s, const Prepared& p, bool paper_init) {
  MlpOptions opt;
  opt.hidden = s.activation;
  opt.init = init_scheme(s, paper_init);
  opt.batch_size = s.batch_size;
  opt.standardize = s.standardize;
  if (!p.test_rows.empty()) {
    opt.val_x = p.brain.select_rows(p.test_rows);
    opt.val_y = p.ds.features.select_rows(p.test_rows);
  }
  return opt;
}

AutoencoderStack pretrain(const TrainSettings& s, const Prepared& p, const std::vector<std::size_t>& arch,
                          bool paper_init) {
  std::vector<std::size_t> rows = p.ds.rows_in(Split::unlabeled);
  if (rows.empty()) rows = p.train_rows;
  require_rows(rows, "unlabeled or train");
  const std::vector<std::size_t> hidden(arch.begin() + 1, arch.end() - 1);
  AutoencoderOptions opt;
  opt.activation = s.activation;
  opt.init = init_scheme(s, paper_init);
  opt.batch_size = s.batch_size;
  opt.standardize = s.standardize;
  return ae_pretrain(p.brain.select_rows(rows), hidden, s.pretraining_epochs, s.sgd(), s.seed, opt);
}

Outcome train_network(const TrainSettings& s, Prepared& p, const TrainOptions& o, TrainingLog& log) {
  require_rows(p.train_rows, "train");
  const Matrix x = p.brain.select_rows(p.train_rows);
  const Matrix y = p.ds.features.select_rows(p.train_rows);
  const bool deep = s.kind == ModelKind::dnn5;
  const std::vector<std::size_t> default_hidden =
      deep ? std::vector<std::size_t>{7500, 6500, 5500} : std::vector<std::size_t>{8000};
  const std::vector<std::size_t> arch = resolve_arch(s, x.cols(), y.cols(), default_hidden);
  const MlpOptions opt = mlp_options(s, p, o.paper_init);

  Outcome out;
  MlpModel model;
  TrainLog fit_log;
  std::size_t first = 0;
  std::string init = "random";
  if (o.resume) {
    Checkpoint prev = load_checkpoint(*o.resume, s.kind);
    if (!prev.next_epoch) throw DataError(o.resume->string() + ": checkpoint has no epoch counter");
    first = *prev.next_epoch;
    if (first > s.epochs) throw ConfigError("checkpoint is already past epochs = " + std::to_string(s.epochs));
    model = std::get<MlpModel>(std::move(prev.model));
    if (model.arch != arch) throw DataError(o.resume->string() + ": layer widths differ from the config");
    fit_log = fit_network(model, x, y, s.sgd(), first, s.epochs - first, s.seed, opt);
    init = "resumed";
  } else if (!deep) {
    MlpFit fit = mlp_fit(x, y, arch, s.sgd(), s.epochs, s.seed, opt);
    model = std::move(fit.model);
    fit_log = std::move(fit.log);
  } else {
    std::optional<AutoencoderStack> stack;
    std::optional<std::filesystem::path> source = o.init;
    const bool random = s.initial_parameters == "scaled-normal" || s.initial_parameters == "std-normal";
    if (!source && !random && !s.initial_parameters.empty()) source = s.initial_parameters;
    if (source) {
      Checkpoint ae = load_checkpoint(*source, ModelKind::ae);
      stack = std::get<AutoencoderStack>(std::move(ae.model));
      init = "autoencoder:" + source->filename().string();
    } else if (!random) {
      stack = pretrain(s, p, arch, o.paper_init);
      log.add_pretraining(*stack);
      out.pretrained = Checkpoint{ModelKind::ae, *stack, p.record.dump(), std::nullopt, std::nullopt};
      init = "autoencoder:pretrained";
    }
    MlpFit fit = dnn_fit(x, y, arch, stack ? &*stack : nullptr, s.sgd(), s.epochs, s.seed, opt);
    model = std::move(fit.model);
    fit_log = std::move(fit.log);
  }
  log.add_fit(fit_log, first);

  const double train = fit_log.epochs.empty() ? fit_log.initial_train_mse : fit_log.epochs.back().train_mse;
  const double test = fit_log.epochs.empty() ? fit_log.initial_val_mse : fit_log.epochs.back().val_mse;
  out.summary["initialization"] = init;
  out.summary["first_epoch"] = first;
  out.summary["initial_train_mse"] = fit_log.initial_train_mse;
  out.summary["final_train_mse"] = train;
  out.summary["final_test_mse"] = finite_or_null(test);
  out.ckpt = Checkpoint{s.kind, std::move(model), p.record.dump(), s.epochs, std::nullopt};
  return out;
}

Outcome train_autoencoder(const TrainSettings& s, Prepared& p, const TrainOptions& o, TrainingLog& log) {
  const std::vector<std::size_t> arch =
      resolve_arch(s, p.ds.brain_dim() == p.brain.cols() ? p.ds.brain_dim() : p.brain.cols(),
                   p.ds.feature_dim(), {7500, 6500, 5500});
  AutoencoderStack stack = pretrain(s, p, arch, o.paper_init);
  log.add_pretraining(stack);
  Outcome out;
  json curves = json::array();
  for (const auto& c : stack.loss_curves) curves.push_back(c.empty() ? json(nullptr) : json(c.back()));
  out.summary["final_reconstruction_mse"] = curves;
  out.ckpt = Checkpoint{ModelKind::ae, std::move(stack), p.record.dump(), std::nullopt, std::nullopt};
  return out;
}

Outcome train_language_model(const TrainSettings& s, Prepared& p, const TrainOptions& o, TrainingLog& log) {
  const std::vector<std::size_t> rows = p.ds.captioned_rows(Split::train);
  require_rows(rows, "captioned train");
  std::vector<Sentence> sentences;
  for (std::size_t r : rows) sentences.push_back(*p.ds.captions[r]);
  const Matrix features = p.ds.features.select_rows(rows);

  std::optional<LmTrainer> trainer;
  if (o.resume) {
    Checkpoint prev = load_checkpoint(*o.resume, ModelKind::lm);
    if (!prev.lm_resume) throw DataError(o.resume->string() + ": checkpoint has no optimizer state");
    LmResumeState& r = *prev.lm_resume;
    if (r.next_epoch > s.epochs) throw ConfigError("checkpoint is already past epochs = " + std::to_string(s.epochs));
    trainer.emplace(std::get<LanguageModel>(std::move(prev.model)), r.config, std::move(r.states), r.next_epoch,
                    r.seed, r.options);
  } else {
    if (s.units.size() > 1) throw ConfigError("units-per-layer for lm is a single width");
    const std::size_t width = s.units.empty() ? 512 : s.units.front();
    Vocabulary vocab = build_vocabulary(sentences, s.min_count);
    LanguageModel model = make_language_model(std::move(vocab), {p.ds.feature_dim(), width, width},
                                              init_scheme(s, o.paper_init), s.seed);
    if (s.word_embedding) load_word2vec_embeddings(*s.word_embedding, model);
    trainer.emplace(std::move(model), s.adam_config(), s.seed, LmTrainOptions{s.batch_size});
  }

  const Vocabulary& vocab = trainer->model().vocab;
  std::vector<TokenSequence> captions;
  for (const Sentence& sent : sentences) captions.push_back(vocab.encode(sent));
  std::vector<TokenSequence> test_captions;
  const std::vector<std::size_t> test_rows = p.ds.captioned_rows(Split::test);
  for (std::size_t r : test_rows) test_captions.push_back(vocab.encode(*p.ds.captions[r]));
  const Matrix test_features = p.ds.features.select_rows(test_rows);

  const std::size_t first = trainer->next_epoch();
  if (first == 0) {
    log.add(0, "train", "perplexity", perplexity(trainer->model(), features, captions));
    if (!test_captions.empty()) log.add(0, "test", "perplexity", perplexity(trainer->model(), test_features, test_captions));
  }
  double train_ppl = std::numeric_limits<double>::quiet_NaN();
  double test_ppl = std::numeric_limits<double>::quiet_NaN();
  while (trainer->next_epoch() < s.epochs) {
    const LmEpochRecord rec = trainer->run_epoch(features, captions);
    if (!std::isfinite(rec.train_loss)) throw NumericError("lm: loss diverged at epoch " + std::to_string(rec.epoch));
    train_ppl = rec.perplexity;
    log.add(rec.epoch + 1, "train", "loss", rec.train_loss);
    log.add(rec.epoch + 1, "train", "perplexity", rec.perplexity);
    if (!test_captions.empty()) {
      test_ppl = perplexity(trainer->model(), test_features, test_captions);
      log.add(rec.epoch + 1, "test", "perplexity", test_ppl);
    }
  }

  Outcome out;
  out.summary["first_epoch"] = first;
  out.summary["vocabulary_size"] = vocab.size();
  out.summary["final_train_perplexity"] = finite_or_null(train_ppl);
  out.summary["final_test_perplexity"] = finite_or_null(test_ppl);
  LmResumeState state{trainer->config(), trainer->optimizer_states(), trainer->next_epoch(), trainer->seed(),
                      trainer->options()};
  out.ckpt = Checkpoint{ModelKind::lm, trainer->model(), p.record.dump(), trainer->next_epoch(), std::move(state)};
  return out;
}

}  // namespace

void run_train(const TrainOptions& o) {
  TrainSettings s = load_train_settings(o.config, o.kind);
  if (o.seed) s.seed = *o.seed;
  if (o.init && o.kind != ModelKind::dnn5) throw ConfigError("--init applies to dnn5 only");
  if (o.resume && (o.kind == ModelKind::ridge || o.kind == ModelKind::ae)) {
    throw ConfigError("--resume applies to mlp3, dnn5 and lm");
  }
  std::filesystem::path target;
  if (o.out) {
    target = *o.out;
  } else if (s.output) {
    target = *s.output / std::string(to_string(o.kind));
  } else {
    throw ConfigError("no output directory: pass --out or set output in the config");
  }

  Prepared p = prepare(s);
  TrainingLog log;
  Outcome result;
  switch (o.kind) {
    case ModelKind::ridge:
      result = train_ridge(s, p, log);
      break;
    case ModelKind::mlp3:
    case ModelKind::dnn5:
      result = train_network(s, p, o, log);
      break;
    case ModelKind::ae:
      result = train_autoencoder(s, p, o, log);
      break;
    case ModelKind::lm:
      result = train_language_model(s, p, o, log);
      break;
  }

  json summary;
  summary["kind"] = to_string(o.kind);
  summary["seed"] = s.seed;
  summary["train_rows"] = p.train_rows.size();
  summary["test_rows"] = p.test_rows.size();
  summary["input_dim"] = p.brain.cols();
  summary["feature_dim"] = p.ds.feature_dim();
  for (auto& [k, v] : result.summary.items()) summary[k] = v;
  summary["settings"] = p.record;
  summary["settings"].erase("voxel-mask-indices");

  StagedDirectory out(target);
  save_checkpoint(out / "model.ncck", result.ckpt);
  if (result.pretrained) save_checkpoint(out / "pretrain.ncck", *result.pretrained);
  write_file_atomic(out / "log.csv", log.text());
  write_file_atomic(out / "summary.json", summary.dump(2) + "\n");
  out.commit();
  std::cout << "trained " << to_string(o.kind) << " -> " << target.string() << "\n";
}

}  // namespace neurocap::cli
