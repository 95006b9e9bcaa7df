// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any
// failure. The optional argument is the path of the neurocap executable,
// needed by the determinism criterion.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include "metric_fixtures.hpp"
#include "neurocap/data/synth.hpp"
#include "neurocap/decoder/generation.hpp"
#include "neurocap/decoder/training.hpp"
#include "neurocap/eval/metrics.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/mathcore/gradcheck.hpp"
#include "neurocap/mathcore/losses.hpp"
#include "neurocap/persist/checkpoint.hpp"
#include "neurocap/pipeline/pipeline.hpp"
#include "neurocap/pipeline/voxels.hpp"
#include "neurocap/regressors/autoencoder.hpp"
#include "neurocap/regressors/ridge.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace neurocap;
using neurocap::testing::random_matrix;
using neurocap::testing::TempDir;
using neurocap::testing::toy_model;
namespace fs = std::filesystem;

namespace {

struct Result {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

std::vector<Matrix> mlp_params(const MlpModel& m) {
  std::vector<Matrix> out;
  for (const DenseLayer& l : m.layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

std::vector<Matrix> lm_params(const LanguageModel& m) {
  std::vector<Matrix> out;
  for (const auto& [name, p] : m.named_parameters()) out.push_back(*p);
  return out;
}

double mlp_gradcheck(const MlpModel& model, const Matrix& x, const Matrix& y) {
  const MultiTapeFunction f = [&](Tape& t, std::span<const Var> p) {
    return record_mlp_loss(t, model, p, t.constant(x), y);
  };
  return finite_difference_check(f, mlp_params(model), 1e-6);
}

// 1. Finite-difference gradient checks for every trainable architecture.
Result gradients() {
  double mlp3 = 0.0, dnn5 = 0.0, ae = 0.0, lm = 0.0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const Matrix x = random_matrix(6, 7, 100 + seed, 0.7);
    const Matrix y = random_matrix(6, 3, 200 + seed, 0.7);
    mlp3 = std::max(mlp3, mlp_gradcheck(make_mlp({7, 9, 3}, Activation::relu, InitScheme::scaled_normal, seed), x, y));
    dnn5 = std::max(dnn5, mlp_gradcheck(make_mlp({7, 8, 6, 5, 3}, Activation::relu, InitScheme::scaled_normal, seed),
                                        x, y));
    ae = std::max(ae, mlp_gradcheck(make_mlp({7, 4, 7}, Activation::relu, InitScheme::scaled_normal, seed), x, x));

    const LanguageModel m = toy_model(4, 300 + seed, 3, 4);
    const Matrix features = random_matrix(3, 3, 400 + seed);
    const std::vector<TokenSequence> caps{{3, 5, 6}, {4}, {6, 3}};
    const MultiTapeFunction f = [&](Tape& t, std::span<const Var> p) {
      return record_lm_loss(t, m, p, features, caps);
    };
    lm = std::max(lm, finite_difference_check(f, lm_params(m), 1e-6));
  }
  const double worst = std::max({mlp3, dnn5, ae, lm});
  return {worst < 1e-5, fmt("max relative error mlp3 %.1e, dnn5 %.1e, ae layer %.1e, lstm-lm %.1e", mlp3, dnn5, ae, lm)};
}

// 2. Closed-form ridge against conjugate gradients.
Result ridge_oracle() {
  double worst = 0.0;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> lambda(0.01, 2.0);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Matrix x = random_matrix(50, 10, 500 + i);
    const Matrix y = random_matrix(50, 4, 600 + i);
    const double l = lambda(rng);
    const RidgeModel m = ridge_fit(x, y, {.lambda = l, .fit_intercept = false});
    const Matrix w = oracle::cg_ridge(x, y, l);
    double sq = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) sq += std::pow(m.weight.values()[k] - w.values()[k], 2);
    worst = std::max(worst, std::sqrt(sq));
  }
  return {worst < 1e-6, fmt("max parameter distance %.1e over 20 problems", worst)};
}

// 3. Planted-model recovery and end-to-end caption reproduction.
Result planted_recovery() {
  SynthSpec spec;
  spec.seed = 3;
  spec.n_train = 240;
  spec.brain_dim = 96;
  spec.feature_dim = 16;
  spec.noise_std = 0.0;
  const SynthData d = synth_generate(spec);
  const PairedDataset& ds = d.dataset;

  const RidgeModel forward = ridge_fit(ds.features, ds.brain, {.lambda = 0.0});
  const double map_error = max_abs(subtract(forward.weight, d.planted_map));

  const RidgeModel decoder = ridge_fit(ds.brain, ds.features, {.lambda = 1e-10});
  std::vector<Sentence> sentences;
  for (const auto& c : ds.captions) sentences.push_back(*c);
  LanguageModel lm = make_language_model(build_vocabulary(sentences, 1), {spec.feature_dim, 32, 32},
                                         InitScheme::scaled_normal, spec.seed);
  std::vector<TokenSequence> captions;
  for (const Sentence& s : sentences) captions.push_back(lm.vocab.encode(s));
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  const LmFit fit = train_lm(ds.features, captions, std::move(lm), cfg, 30, spec.seed);

  const Regressor reg = decoder;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::vector<Hypothesis> h = decode_brain(reg, fit.model, ds.brain.row(i));
    hits += fit.model.vocab.decode(h.front().tokens) == sentences[i];
  }
  const double rate = static_cast<double>(hits) / static_cast<double>(ds.size());
  return {map_error < 1e-6 && rate >= 0.8,
          fmt("planted map max error %.1e; decoded caption = planted caption for %zu/%zu (%.1f%%)", map_error, hits,
              ds.size(), 100.0 * rate)};
}

// 4. Overfitting: brain_dim far above the sample count.
Result overfitting() {
  std::size_t ok = 0;
  std::string ratios;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.n_train = 250;
    spec.brain_dim = 2000;
    spec.feature_dim = 32;
    spec.noise_std = 1.0;
    const auto [train, test] = split(synth_generate(spec).dataset, 0.6, seed);
    MlpOptions opt;
    opt.standardize = true;
    opt.val_x = test.brain;
    opt.val_y = test.features;
    const std::size_t epochs = 300;
    const MlpFit fit = mlp_fit(train.brain, train.features, {2000, 244, 32}, SgdConfig{}, epochs, seed, opt);
    const EpochRecord& last = fit.log.epochs.back();
    const EpochRecord& earlier = fit.log.epochs[epochs - epochs / 10 - 1];
    // Converged: within 5% of the initial MSE and flat (under 1% of it)
    // across the last tenth of the epochs.
    const double scale = fit.log.initial_train_mse;
    const bool converged =
        last.train_mse <= 0.05 * scale && std::abs(earlier.train_mse - last.train_mse) <= 0.01 * scale;
    const double ratio = last.val_mse / last.train_mse;
    ok += converged && ratio >= 2.0;
    ratios += fmt("%s%.1fx (train %.4f)%s", seed ? ", " : "", ratio, last.train_mse, converged ? "" : " not converged");
    if (seed == 0) ratios = fmt("n_train %zu: ", train.size()) + ratios;
  }
  return {ok == 5, "test/train MSE " + ratios};
}

// 5. Stacked-autoencoder initialisation against paired random init.
Result pretraining_benefit() {
  std::size_t wins = 0;
  std::string pairs;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec;
    spec.seed = seed;
    spec.n_train = 150;
    spec.n_unlabeled = 251;
    spec.brain_dim = 600;
    spec.feature_dim = 37;
    spec.noise_std = 0.5;
    const SynthData d = synth_generate(spec);
    std::vector<std::size_t> labeled, unlabeled;
    for (std::size_t i = 0; i < d.dataset.size(); ++i) (d.dataset.captions[i] ? labeled : unlabeled).push_back(i);
    const Matrix x = d.dataset.brain.select_rows(labeled);
    const Matrix y = d.dataset.features.select_rows(labeled);
    const std::vector<std::size_t> arch{600, 69, 59, 50, 37};
    AutoencoderOptions ao;
    ao.standardize = true;
    MlpOptions mo;
    mo.standardize = true;
    const AutoencoderStack stack =
        ae_pretrain(d.dataset.brain.select_rows(unlabeled), {69, 59, 50}, 200, SgdConfig{}, seed, ao);
    const double pre = dnn_fit(x, y, arch, &stack, SgdConfig{}, 1, seed, mo).log.initial_train_mse;
    const double rnd = dnn_fit(x, y, arch, nullptr, SgdConfig{}, 1, seed, mo).log.initial_train_mse;
    wins += pre <= rnd;
    pairs += fmt("%s%.3f/%.3f", seed ? " " : "", pre, rnd);
  }
  return {wins >= 8, fmt("autoencoder init no worse in %zu/10 seeds (epoch-0 MSE ae/random: ", wins) + pairs + ")"};
}

// 6. Tiny-corpus language-model overfit.
Result lm_training() {
  const LanguageModel m =
      make_language_model(neurocap::testing::small_vocab(6), {4, 16, 16}, InitScheme::scaled_normal, 7);
  const Matrix features = random_matrix(5, 4, 8);
  const std::vector<TokenSequence> caps{{3, 4, 5}, {6, 7}, {8, 3, 3, 4}, {5}, {7, 6, 8}};
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  const LmFit fit = train_lm(features, caps, m, cfg, 200, 9);
  std::size_t first = 0;
  double lowest = INFINITY;
  for (const LmEpochRecord& r : fit.log) {
    if (first == 0 && r.perplexity < 1.5) first = r.epoch + 1;
    lowest = std::min(lowest, r.perplexity);
  }
  return {first > 0 && lowest >= 1.0,
          fmt("perplexity < 1.5 after epoch %zu, lowest %.4f, final %.4f", first, lowest, fit.log.back().perplexity)};
}

// 7. Beam search against exhaustive enumeration, beam-1 against greedy.
Result beam_exactness() {
  std::size_t exact = 0;
  std::size_t greedy = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const LanguageModel m = toy_model(2, 900 + seed, 3, 4, 2.0);
    const Matrix fm = random_matrix(1, 3, 1900 + seed);
    const std::vector<double> f(fm.values().begin(), fm.values().end());
    GenerationOptions opt;
    opt.max_len = 4;
    const std::size_t space = oracle::search_space_size(2, opt.max_len);
    const auto expected = oracle::enumerate_captions(m, f, opt.max_len, false);
    const auto beam = generate_beam(m, f, space, opt);
    bool same = beam.size() == expected.size();
    for (std::size_t i = 0; same && i < beam.size(); ++i) {
      same = beam[i].tokens == expected[i].tokens && beam[i].finished == expected[i].finished &&
             std::abs(beam[i].score - expected[i].score) <= 1e-12 * std::max(1.0, std::abs(expected[i].score));
    }
    exact += same;
    const auto one = generate_beam(m, f, 1, opt);
    const Hypothesis g = generate_greedy(m, f, opt);
    greedy += one.size() == 1 && one[0].tokens == g.tokens && one[0].log_prob == g.log_prob;
  }
  return {exact == 100 && greedy == 100,
          fmt("full-width beam = exhaustive ranking on %zu/100 models (vocab 5, max_len 4); beam-1 = greedy on %zu/100",
              exact, greedy)};
}

// 8. Metric fixtures, identical and disjoint sentences.
Result metric_oracles() {
  double worst = 0.0;
  for (const auto& c : neurocap::testing::metric_fixtures()) {
    const Sentence cand = neurocap::testing::words(c.candidate);
    worst = std::max(worst, std::abs(bleu4(cand, c.references) - c.bleu));
    worst = std::max(worst, std::abs(meteor_lite(cand, c.references) - c.meteor));
  }
  const Sentence s = neurocap::testing::words("a man rides a wave on a surfboard");
  const std::vector<Sentence> same{s};
  const std::vector<Sentence> other{neurocap::testing::words("two dogs play in snow")};
  const double bleu_same = bleu4(s, same);
  const double bleu_disjoint = bleu4(s, other);
  const double meteor_disjoint = meteor_lite(s, other);
  const bool pass = worst <= 1e-9 && bleu_same == 1.0 && bleu_disjoint < 1e-9 && meteor_disjoint == 0.0;
  return {pass, fmt("10 fixtures max abs error %.1e; identical BLEU-4 %.3f; disjoint BLEU-4 %.1e, meteor_lite %.1f",
                    worst, bleu_same, bleu_disjoint, meteor_disjoint)};
}

// 9. Voxel-count monotonicity over random score files.
Result mask_monotonicity() {
  TempDir dir("neurocap-accept");
  std::mt19937_64 rng(17);
  std::size_t monotone = 0;
  const std::size_t files = 200;
  for (std::size_t i = 0; i < files; ++i) {
    std::uniform_int_distribution<std::size_t> len(1, 3000);
    std::normal_distribution<double> score(0.05, 0.08 + 0.001 * static_cast<double>(i % 50));
    std::vector<double> scores(len(rng));
    for (double& s : scores) s = score(rng);
    save_scores(dir.path() / "scores.csv", scores);
    const std::vector<double> loaded = load_scores(dir.path() / "scores.csv");
    std::size_t prev = loaded.size();
    bool ok = loaded == scores;
    for (double t : {0.05, 0.1, 0.15, 0.2}) {
      const std::size_t n = select_voxels(loaded, t).count;
      ok = ok && n <= prev;
      prev = n;
    }
    monotone += ok;
  }
  return {monotone == files, fmt("counts non-increasing over 0.05 < 0.1 < 0.15 < 0.2 in %zu/%zu score files",
                                 monotone, files)};
}

// 10. Bitwise checkpoint round trips and exact resume.
Result persistence() {
  TempDir dir("neurocap-accept");
  const Matrix x = random_matrix(40, 6, 31);
  const Matrix y = random_matrix(40, 3, 32);
  const AutoencoderStack stack = ae_pretrain(x, {5, 4, 4}, 3, SgdConfig{}, 2);
  const Matrix features = random_matrix(6, 3, 10);
  const std::vector<TokenSequence> caps{{3, 4}, {5, 6, 3}, {4}, {7, 7, 3, 5}, {6}, {3, 5}};
  AdamConfig adam;
  adam.learning_rate = 0.01;
  const LmTrainOptions lm_opts{.batch_size = 4};
  LmTrainer lm(toy_model(5, 11), adam, 12, lm_opts);
  lm.train(features, caps, 2);

  const std::vector<Checkpoint> ckpts{
      {ModelKind::ridge, ridge_fit(x, y), "{}", std::nullopt, std::nullopt},
      {ModelKind::mlp3, mlp_fit(x, y, {6, 8, 3}, SgdConfig{}, 2, 1).model, "{}", 2, std::nullopt},
      {ModelKind::dnn5, dnn_fit(x, y, {6, 5, 4, 4, 3}, &stack, SgdConfig{}, 2, 1).model, "{}", 2, std::nullopt},
      {ModelKind::ae, stack, "{}", std::nullopt, std::nullopt},
      {ModelKind::lm, lm.model(), "{}", lm.next_epoch(),
       LmResumeState{lm.config(), lm.optimizer_states(), lm.next_epoch(), lm.seed(), lm.options()}},
  };
  std::size_t bitwise = 0;
  for (const Checkpoint& c : ckpts) {
    const fs::path a = dir.path() / (std::string(to_string(c.kind)) + ".ncck");
    const fs::path b = dir.path() / (std::string(to_string(c.kind)) + "-again.ncck");
    save_checkpoint(a, c);
    save_checkpoint(b, load_checkpoint(a, c.kind));
    bitwise += read_file(a) == read_file(b) && read_file(a) == encode_checkpoint(c);
  }

  // mlp3: 3 epochs, checkpoint, 3 more against 6 straight.
  MlpOptions opt;
  opt.batch_size = 8;
  const MlpFit full = mlp_fit(x, y, {6, 8, 3}, SgdConfig{}, 6, 4, opt);
  MlpFit part = mlp_fit(x, y, {6, 8, 3}, SgdConfig{}, 3, 4, opt);
  save_checkpoint(dir.path() / "part.ncck", {ModelKind::mlp3, part.model, "{}", 3, std::nullopt});
  MlpModel resumed = std::get<MlpModel>(load_checkpoint(dir.path() / "part.ncck").model);
  TrainLog rest = fit_network(resumed, x, y, SgdConfig{}, 3, 3, 4, opt);
  std::vector<EpochRecord> joined = part.log.epochs;
  joined.insert(joined.end(), rest.epochs.begin(), rest.epochs.end());
  bool mlp_exact = joined.size() == full.log.epochs.size() && mlp_params(resumed) == mlp_params(full.model);
  for (std::size_t i = 0; mlp_exact && i < joined.size(); ++i) {
    mlp_exact = joined[i].train_loss == full.log.epochs[i].train_loss &&
                joined[i].train_mse == full.log.epochs[i].train_mse;
  }

  // lm: 2 epochs, checkpoint, 2 more against 4 straight.
  LmTrainer straight(toy_model(5, 11), adam, 12, lm_opts);
  const auto straight_log = straight.train(features, caps, 4);
  Checkpoint back = load_checkpoint(dir.path() / "lm.ncck", ModelKind::lm);
  LmResumeState& r = *back.lm_resume;
  LmTrainer second(std::get<LanguageModel>(std::move(back.model)), r.config, r.states, r.next_epoch, r.seed,
                   r.options);
  LmTrainer first(toy_model(5, 11), adam, 12, lm_opts);
  auto lm_log = first.train(features, caps, 2);
  const auto tail = second.train(features, caps, 2);
  lm_log.insert(lm_log.end(), tail.begin(), tail.end());
  bool lm_exact = lm_log.size() == straight_log.size() && lm_params(second.model()) == lm_params(straight.model());
  for (std::size_t i = 0; lm_exact && i < lm_log.size(); ++i) {
    lm_exact = lm_log[i].train_loss == straight_log[i].train_loss && lm_log[i].perplexity == straight_log[i].perplexity;
  }
  return {bitwise == 5 && mlp_exact && lm_exact,
          fmt("%zu/5 kinds round-trip bitwise; resumed loss log identical: mlp3 %s, lm %s", bitwise,
              mlp_exact ? "yes" : "no", lm_exact ? "yes" : "no")};
}

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = "'" + cli + "' " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 11. synth + train + decode twice with one seed.
Result determinism(const std::string& cli) {
  if (cli.empty()) return {false, "no neurocap executable given"};
  TempDir dir("neurocap-accept");
  std::vector<std::map<std::string, std::string>> runs;
  for (const char* name : {"first", "second"}) {
    const fs::path root = dir.path() / name;
    fs::create_directories(root);
    const std::string r = "'" + root.string() + "/";
    std::ofstream(root / "run.toml") << "dataset = \"ds\"\noutput = \"runs\"\nseed = 11\n"
                                        "[mlp3]\nepochs = 5\nunits-per-layer = [120, 64, 16]\n"
                                        "[lm]\nepochs = 5\nmin-count = 1\nunits-per-layer = 24\n";
    bool ok = run_cli(cli, "synth --seed 11 --n 200 --brain-dim 120 --feature-dim 16 --out " + r + "ds'") == 0;
    for (const char* kind : {"ridge", "mlp3", "lm"}) {
      ok = ok && run_cli(cli, std::string("train ") + kind + " --config " + r + "run.toml'") == 0;
    }
    ok = ok && run_cli(cli, "decode --input " + r + "ds' --regressor " + r + "runs/mlp3/model.ncck' --lm " + r +
                                "runs/lm/model.ncck' --beam 3 --out " + r + "captions.jsonl'") == 0;
    if (!ok) return {false, "a command failed"};
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
      if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    }
    runs.push_back(std::move(files));
  }
  std::size_t differing = 0;
  for (const auto& [name, bytes] : runs[0]) differing += !runs[1].contains(name) || runs[1].at(name) != bytes;
  return {differing == 0 && runs[0].size() == runs[1].size(),
          fmt("%zu artifacts compared, %zu differ", runs[0].size(), differing)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  struct Criterion {
    const char* name;
    double limit_s;  ///< 0 when no time limit applies
    std::function<Result()> run;
  };
  const std::vector<Criterion> criteria{
      {"gradient correctness", 5, gradients},
      {"ridge oracle equivalence", 1, ridge_oracle},
      {"planted-model recovery", 60, planted_recovery},
      {"overfitting regime", 120, overfitting},
      {"pretraining benefit", 120, pretraining_benefit},
      {"lm training", 30, lm_training},
      {"beam search exactness", 10, beam_exactness},
      {"metric oracles", 0, metric_oracles},
      {"voxel-mask monotonicity", 0, mask_monotonicity},
      {"persistence", 0, persistence},
      {"determinism", 0, [&] { return determinism(cli); }},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const Criterion& c = criteria[i];
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::string timing = fmt("%.2f s", seconds);
    if (c.limit_s > 0) {
      timing += fmt(" of %.0f s", c.limit_s);
      if (seconds > c.limit_s) {
        r.pass = false;
        timing += " EXCEEDED";
      }
    }
    failures += !r.pass;
    std::printf("AC%zu %s  %s: %s [%s]\n", i + 1, r.pass ? "PASS" : "FAIL", c.name, r.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
