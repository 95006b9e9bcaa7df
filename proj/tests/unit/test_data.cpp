#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "neurocap/data/dataset.hpp"
#include "neurocap/data/synth.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/mathcore/losses.hpp"
#include "neurocap/regressors/ridge.hpp"
#include "testing.hpp"

using namespace neurocap;
using neurocap::testing::random_matrix;
using neurocap::testing::TempDir;

namespace {

SynthSpec small_spec(std::uint64_t seed) {
  SynthSpec s;
  s.seed = seed;
  s.n_train = 200;
  s.n_unlabeled = 20;
  s.brain_dim = 60;
  s.feature_dim = 12;
  return s;
}

Matrix rows_of(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(m.row(rows[i]).begin(), m.row(rows[i]).end(), out.row(i).begin());
  }
  return out;
}

}  // namespace

TEST_CASE("synthetic data is deterministic per seed") {
  const SynthData a = synth_generate(small_spec(3));
  const SynthData b = synth_generate(small_spec(3));
  CHECK(a.dataset == b.dataset);
  CHECK(a.planted_map == b.planted_map);
  CHECK(a.templates == b.templates);
  CHECK_FALSE(synth_generate(small_spec(4)).dataset == a.dataset);

  const PairedDataset& ds = a.dataset;
  CHECK(ds.size() == 220);
  CHECK(ds.brain_dim() == 60);
  CHECK(ds.feature_dim() == 12);
  CHECK(ds.rows_in(Split::train).size() == 200);
  CHECK(ds.rows_in(Split::unlabeled).size() == 20);
  CHECK(ds.captioned_rows(Split::train).size() == 200);
  CHECK(ds.seed == std::optional<std::uint64_t>{3});
  const std::vector<std::string_view> words = synth_lexicon();
  const std::set<std::string_view> lexicon(words.begin(), words.end());
  for (std::size_t r : ds.captioned_rows(Split::train)) {
    CHECK(std::find(a.templates[a.cluster[r]].begin(), a.templates[a.cluster[r]].end(), *ds.captions[r]) !=
          a.templates[a.cluster[r]].end());
    for (const std::string& w : *ds.captions[r]) CHECK(lexicon.contains(w));
  }
}

TEST_CASE("noiseless synthetic brain data recovers the planted map") {
  SynthSpec spec = small_spec(5);
  spec.noise_std = 0.0;
  const SynthData d = synth_generate(spec);
  const RidgeModel m = ridge_fit(d.dataset.features, d.dataset.brain, {.lambda = 0.0});
  CHECK(max_abs_diff(m.weight, d.planted_map) < 1e-6);
  CHECK(max_abs(m.bias) < 1e-6);
}

TEST_CASE("held-out ridge error grows with the noise level") {
  const double levels[] = {0.0, 0.1, 0.3, 1.0};
  double prev = -1.0;
  for (double noise : levels) {
    std::vector<double> errors;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      SynthSpec spec = small_spec(seed);
      spec.n_unlabeled = 0;
      spec.noise_std = noise;
      const PairedDataset ds = synth_generate(spec).dataset;
      const auto [train, test] = split(ds, 0.8, seed);
      const RidgeModel m = ridge_fit(train.brain, train.features, {.lambda = 1.0});
      errors.push_back(mse_loss(m.predict(test.brain), test.features).loss);
    }
    std::nth_element(errors.begin(), errors.begin() + 2, errors.end());
    CAPTURE(noise);
    CHECK(errors[2] > prev);
    prev = errors[2];
  }
}

TEST_CASE("synth spec validation and the scale-ratio preset") {
  SynthSpec bad = small_spec(0);
  bad.brain_dim = 0;
  CHECK_THROWS_AS(synth_generate(bad), ConfigError);
  bad = small_spec(0);
  bad.noise_std = -1.0;
  CHECK_THROWS_AS(synth_generate(bad), ConfigError);
  bad = small_spec(0);
  bad.ar1 = 1.0;
  CHECK_THROWS_AS(synth_generate(bad), ConfigError);

  const SynthSpec p = paper_scale_ratio_preset(9);
  CHECK(p.n_train == 4500);
  CHECK(p.n_unlabeled == 7540);
  CHECK(p.seed == 9);
}

TEST_CASE("dataset files round-trip bitwise") {
  TempDir dir;
  PairedDataset ds = synth_generate(small_spec(6)).dataset;
  assign_split(ds, 0.7, 1);
  save_dataset(ds, dir / "a");
  const PairedDataset back = load_dataset(dir / "a");
  CHECK(back == ds);
  save_dataset(back, dir / "b");
  for (const char* f : {"meta.json", "brain.ncmx", "features.ncmx", "captions.jsonl"}) {
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  }

  PairedDataset plain;
  plain.ids = {5, 9};
  plain.brain = random_matrix(2, 3, 1);
  plain.features = random_matrix(2, 2, 2);
  plain.captions = {std::nullopt, Sentence{"a", "b"}};
  plain.splits = {Split::test, Split::train};
  plain.provenance = "fixture";
  save_dataset(plain, dir / "c");
  CHECK(load_dataset(dir / "c") == plain);
}

TEST_CASE("malformed dataset files are rejected") {
  TempDir dir;
  const PairedDataset ds = synth_generate(small_spec(7)).dataset;
  save_dataset(ds, dir / "ok");

  auto copy = [&](const std::string& name) {
    std::filesystem::copy(dir / "ok", dir / name);
    return dir / name;
  };

  const auto truncated = copy("truncated");
  const std::string brain = read_file(truncated / "brain.ncmx");
  write_file_atomic(truncated / "brain.ncmx", brain.substr(0, 1000));
  try {
    (void)load_dataset(truncated);
    FAIL("truncated dataset loaded");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }

  const auto mixed = copy("mixed");
  save_matrix(mixed / "features.ncmx", random_matrix(ds.size(), ds.feature_dim() + 1, 3));
  CHECK_THROWS_AS(load_dataset(mixed), DataError);

  const auto dup = copy("dup");
  nlohmann::ordered_json meta = nlohmann::ordered_json::parse(read_file(dup / "meta.json"));
  meta["ids"][1] = meta["ids"][0];
  write_file_atomic(dup / "meta.json", meta.dump(2));
  CHECK_THROWS_AS(load_dataset(dup), DataError);

  const auto header = copy("header");
  meta = nlohmann::ordered_json::parse(read_file(header / "meta.json"));
  meta["format"] = "something-else";
  write_file_atomic(header / "meta.json", meta.dump(2));
  CHECK_THROWS_AS(load_dataset(header), DataError);

  PairedDataset nan = ds;
  nan.brain(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(nan.validate(), DataError);
}

TEST_CASE("split examples") {
  PairedDataset ds;
  ds.brain = random_matrix(10, 2, 1);
  ds.features = random_matrix(10, 2, 2);
  for (std::uint64_t i = 0; i < 10; ++i) ds.ids.push_back(100 + i);
  ds.captions.assign(10, std::nullopt);
  ds.splits.assign(10, Split::train);

  const auto [train, test] = split(ds, 0.5, 42);
  CHECK(train.size() == 5);
  CHECK(test.size() == 5);
  std::set<std::uint64_t> all(train.ids.begin(), train.ids.end());
  all.insert(test.ids.begin(), test.ids.end());
  CHECK(all.size() == 10);
  for (const Split s : test.splits) CHECK(s == Split::test);

  const auto [train2, test2] = split(ds, 0.5, 42);
  CHECK(train2 == train);
  CHECK(test2 == test);
  bool differs = false;
  for (std::uint64_t seed = 0; seed < 10 && !differs; ++seed) differs = split(ds, 0.5, seed).first.ids != train.ids;
  CHECK(differs);

  for (double f : {0.0, 1.0, -0.5, 1.5, std::numeric_limits<double>::quiet_NaN()}) {
    CHECK_THROWS_AS(split(ds, f, 1), ConfigError);
  }
}

TEST_CASE("curated evaluation subset from a held-out pool") {
  TempDir dir;
  SynthSpec spec = small_spec(8);
  spec.n_train = 1500;
  spec.n_unlabeled = 0;
  const PairedDataset ds = synth_generate(spec).dataset;
  const auto [train, pool] = split(ds, 0.8, 8);
  CHECK(pool.size() == 300);

  {
    std::ofstream out(dir / "curated.txt");
    out << "# curated evaluation ids\n";
    for (std::size_t i = 0; i < 300; i += 5) out << pool.ids[i] << "\n";
  }
  const std::vector<std::uint64_t> ids = load_id_list(dir / "curated.txt");
  CHECK(ids.size() == 60);
  std::vector<std::size_t> rows;
  for (std::uint64_t id : ids) {
    const auto it = std::find(pool.ids.begin(), pool.ids.end(), id);
    REQUIRE(it != pool.ids.end());
    rows.push_back(static_cast<std::size_t>(it - pool.ids.begin()));
  }
  const PairedDataset eval = pool.subset(rows);
  CHECK(eval.size() == 60);
  CHECK(eval.ids == ids);
  CHECK(eval.brain == rows_of(pool.brain, rows));
}
