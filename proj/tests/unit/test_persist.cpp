#include <doctest.h>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/persist/checkpoint.hpp"
#include "neurocap/regressors/regressor.hpp"
#include "testing.hpp"

using namespace neurocap;
using neurocap::testing::random_matrix;
using neurocap::testing::TempDir;
using neurocap::testing::toy_model;

namespace {

RidgeModel sample_ridge() {
  return ridge_fit(random_matrix(40, 6, 1), random_matrix(40, 3, 2), {.lambda = 0.5, .standardize = true});
}

MlpModel sample_mlp(std::vector<std::size_t> arch) {
  return make_mlp(arch, Activation::sigmoid, InitScheme::scaled_normal, 3);
}

AutoencoderStack sample_ae() {
  SgdConfig cfg;
  return ae_pretrain(random_matrix(30, 6, 4), {5, 4}, 3, cfg, 5, {.standardize = true});
}

std::vector<Matrix> lm_params(const LanguageModel& m) {
  std::vector<Matrix> out;
  for (const auto& [name, p] : m.named_parameters()) out.push_back(*p);
  return out;
}

}  // namespace

TEST_CASE("crc64 check value") {
  CHECK(crc64("123456789") == 0x995DC9BBDF1939FAull);
  CHECK(crc64("") == 0);
}

TEST_CASE("every model kind round-trips bitwise") {
  TempDir dir;
  std::vector<Checkpoint> all;
  all.push_back({ModelKind::ridge, sample_ridge(), R"({"lambda":0.5})", std::nullopt, std::nullopt});
  all.push_back({ModelKind::mlp3, sample_mlp({6, 5, 3}), "{}", 7, std::nullopt});
  all.push_back({ModelKind::dnn5, sample_mlp({6, 5, 5, 4, 3}), "{}", std::nullopt, std::nullopt});
  all.push_back({ModelKind::ae, sample_ae(), "{}", std::nullopt, std::nullopt});
  all.push_back({ModelKind::lm, toy_model(5, 6), "{}", std::nullopt, std::nullopt});

  for (const Checkpoint& c : all) {
    CAPTURE(to_string(c.kind));
    const std::string path = (dir / (std::string(to_string(c.kind)) + ".ncck")).string();
    save_checkpoint(path, c);
    const std::string bytes = read_file(path);
    CHECK(bytes.substr(0, 4) == "NCCK");
    const Checkpoint back = load_checkpoint(path, c.kind);
    CHECK(back.kind == c.kind);
    CHECK(back.config == c.config);
    CHECK(back.next_epoch == c.next_epoch);
    CHECK(back.model.index() == c.model.index());
    CHECK(encode_checkpoint(back) == bytes);
  }

  const Checkpoint lm = load_checkpoint(dir / "lm.ncck");
  const auto& restored = std::get<LanguageModel>(lm.model);
  CHECK(lm_params(restored) == lm_params(std::get<LanguageModel>(all[4].model)));
  CHECK(restored.vocab.tokens() == std::get<LanguageModel>(all[4].model).vocab.tokens());

  const Checkpoint ae_ckpt = load_checkpoint(dir / "ae.ncck");
  const auto& ae = std::get<AutoencoderStack>(ae_ckpt.model);
  const auto& ae0 = std::get<AutoencoderStack>(all[3].model);
  CHECK(ae.loss_curves == ae0.loss_curves);
  CHECK(ae.encoders[1].weight == ae0.encoders[1].weight);
  CHECK(ae.input.scale == ae0.input.scale);
}

TEST_CASE("a reloaded ridge model predicts identically") {
  TempDir dir;
  const RidgeModel m = sample_ridge();
  save_checkpoint(dir / "r.ncck", {ModelKind::ridge, m, "{}", std::nullopt, std::nullopt});
  const Regressor back = load_regressor(dir / "r.ncck");
  const Matrix x = random_matrix(100, 6, 9);
  CHECK(predict(back, x) == m.predict(x));

  save_checkpoint(dir / "m.ncck", {ModelKind::dnn5, sample_mlp({6, 5, 5, 4, 3}), "{}", std::nullopt, std::nullopt});
  const Regressor mlp = load_regressor(dir / "m.ncck");
  CHECK(predict(mlp, x) == sample_mlp({6, 5, 5, 4, 3}).predict(x));
  save_checkpoint(dir / "lm.ncck", {ModelKind::lm, toy_model(2, 1), "{}", std::nullopt, std::nullopt});
  CHECK_THROWS_AS(load_regressor(dir / "lm.ncck"), KindError);
}

TEST_CASE("corruption, version and kind errors") {
  TempDir dir;
  const Checkpoint c{ModelKind::ridge, sample_ridge(), "{}", std::nullopt, std::nullopt};
  const std::string bytes = encode_checkpoint(c);

  for (std::size_t at : {std::size_t{24}, bytes.size() / 2, bytes.size() - 9}) {
    std::string bad = bytes;
    bad[at] = static_cast<char>(bad[at] ^ 0x40);
    CHECK_THROWS_AS(decode_checkpoint(bad, "flipped"), ChecksumError);
  }

  std::string version = bytes;
  version[4] = 2;
  CHECK_THROWS_AS(decode_checkpoint(version, "version"), VersionError);

  std::string tag = bytes;
  tag[8] = 9;
  CHECK_THROWS_AS(decode_checkpoint(tag, "tag"), KindError);
  tag[8] = static_cast<char>(ModelKind::lm);
  CHECK_THROWS_AS(decode_checkpoint(tag, "tag"), KindError);

  save_checkpoint(dir / "r.ncck", c);
  CHECK_THROWS_AS(load_checkpoint(dir / "r.ncck", ModelKind::mlp3), KindError);

  try {
    (void)decode_checkpoint(bytes.substr(0, 60), "short");
    FAIL("truncated checkpoint decoded");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
  CHECK_THROWS_AS(decode_checkpoint("XXXX" + bytes.substr(4), "magic"), DataError);
  CHECK_THROWS_AS(decode_checkpoint(bytes + "x", "trailing"), DataError);

  CHECK_THROWS_AS(save_checkpoint(dir / "bad.ncck", {ModelKind::mlp3, sample_mlp({6, 5, 5, 3}), "{}", {}, {}}),
                  KindError);
  CHECK_THROWS_AS(save_checkpoint(dir / "bad.ncck", {ModelKind::dnn5, sample_mlp({6, 5, 3}), "{}", {}, {}}),
                  KindError);
  CHECK_THROWS_AS(save_checkpoint(dir / "bad.ncck", {ModelKind::lm, sample_ridge(), "{}", {}, {}}), KindError);
  CHECK_FALSE(std::filesystem::exists(dir / "bad.ncck"));
}

TEST_CASE("language-model training resumes exactly through a checkpoint") {
  TempDir dir;
  const Matrix features = random_matrix(6, 3, 10);
  const std::vector<TokenSequence> caps{{3, 4}, {5, 6, 3}, {4}, {7, 7, 3, 5}, {6}, {3, 5}};
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  const LmTrainOptions opts{.batch_size = 4};

  LmTrainer continuous(toy_model(5, 11), cfg, 12, opts);
  continuous.train(features, caps, 4);

  LmTrainer first(toy_model(5, 11), cfg, 12, opts);
  first.train(features, caps, 2);
  Checkpoint c{ModelKind::lm, first.model(), "{}", first.next_epoch(),
               LmResumeState{first.config(), first.optimizer_states(), first.next_epoch(), first.seed(),
                             first.options()}};
  save_checkpoint(dir / "lm.ncck", c);

  Checkpoint back = load_checkpoint(dir / "lm.ncck", ModelKind::lm);
  REQUIRE(back.lm_resume.has_value());
  LmResumeState& r = *back.lm_resume;
  CHECK(r.next_epoch == 2);
  CHECK(r.options.batch_size == 4);
  LmTrainer resumed(std::get<LanguageModel>(std::move(back.model)), r.config, r.states, r.next_epoch, r.seed,
                    r.options);
  resumed.train(features, caps, 2);
  CHECK(lm_params(resumed.model()) == lm_params(continuous.model()));
  CHECK(resumed.next_epoch() == 4);
}

TEST_CASE("kind names") {
  for (ModelKind k : {ModelKind::ridge, ModelKind::mlp3, ModelKind::dnn5, ModelKind::lm, ModelKind::ae}) {
    CHECK(parse_model_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_model_kind("svm"), ConfigError);
}
