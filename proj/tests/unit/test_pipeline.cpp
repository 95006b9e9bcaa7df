#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "neurocap/decoder/generation.hpp"
#include "neurocap/errors.hpp"
#include "neurocap/mathcore/binary_io.hpp"
#include "neurocap/pipeline/pipeline.hpp"
#include "neurocap/pipeline/retrieval.hpp"
#include "neurocap/pipeline/voxels.hpp"
#include "neurocap/regressors/ridge.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace neurocap;
using neurocap::testing::random_matrix;
using neurocap::testing::TempDir;
using neurocap::testing::toy_model;

namespace {

std::vector<double> row_of(const Matrix& m, std::size_t r) {
  const auto row = m.row(r);
  return {row.begin(), row.end()};
}

}  // namespace

TEST_CASE("select_voxels examples") {
  const std::vector<double> scores{0.3, 0.1, 0.0};
  const VoxelMask all = select_voxels(scores, -1.0);
  CHECK(all.count == 3);
  CHECK(all.indices() == std::vector<std::size_t>{0, 1, 2});

  const VoxelMask one = select_voxels(scores, 0.15);
  CHECK(one.count == 1);
  CHECK(one.indices() == std::vector<std::size_t>{0});
  CHECK(one.threshold == 0.15);

  CHECK(select_voxels(scores, 0.1).count == 1);  // strictly greater
  CHECK_THROWS_AS(select_voxels(scores, std::numeric_limits<double>::quiet_NaN()), NumericError);
  const std::vector<double> bad{0.1, std::numeric_limits<double>::infinity()};
  CHECK_THROWS_AS(select_voxels(bad, 0.0), NumericError);
}

TEST_CASE("select_voxels is monotone in the threshold") {
  const Matrix s = random_matrix(1, 500, 1, 0.1);
  const std::span<const double> scores = s.values();
  const double thresholds[] = {-0.1, 0.0, 0.05, 0.1, 0.15, 0.2, 0.3};
  for (std::size_t i = 0; i + 1 < std::size(thresholds); ++i) {
    const VoxelMask lo = select_voxels(scores, thresholds[i]);
    const VoxelMask hi = select_voxels(scores, thresholds[i + 1]);
    CHECK(hi.count <= lo.count);
    for (std::size_t v = 0; v < scores.size(); ++v) {
      if (hi.selected[v]) CHECK(lo.selected[v]);
    }
  }
}

TEST_CASE("apply_mask examples") {
  const Matrix x{{1, 2, 3}, {4, 5, 6}};
  const std::size_t all_idx[] = {0, 1, 2};
  CHECK(apply_mask(x, VoxelMask::from_indices(3, all_idx, 0.0)) == x);
  const std::size_t idx[] = {0, 2};
  const VoxelMask mask = VoxelMask::from_indices(3, idx, 0.0);
  CHECK(mask.count == 2);
  CHECK(apply_mask(x, mask) == Matrix{{1, 3}, {4, 6}});
  const std::vector<double> v{7, 8, 9};
  CHECK(apply_mask(v, mask) == std::vector<double>{7, 9});
  CHECK_THROWS_AS(apply_mask(Matrix(1, 4), mask), ShapeError);
  const std::size_t unsorted[] = {2, 0};
  CHECK_THROWS_AS(VoxelMask::from_indices(3, unsorted, 0.0), DataError);
}

TEST_CASE("a mask-trained regressor never reads unselected voxels") {
  const Matrix scores = random_matrix(1, 40, 2);
  const VoxelMask mask = select_voxels(scores.values(), 0.0);
  const Matrix x = random_matrix(60, 40, 3);
  const Matrix y = random_matrix(60, 5, 4);
  const Regressor model = ridge_fit(apply_mask(x, mask), y, {.lambda = 1.0});

  std::vector<double> record = row_of(x, 0);
  const std::vector<double> clean = predict(model, apply_mask(record, mask));
  for (std::size_t v = 0; v < record.size(); ++v) {
    if (!mask.selected[v]) record[v] = std::numeric_limits<double>::quiet_NaN();
  }
  CHECK(predict(model, apply_mask(record, mask)) == clean);
}

TEST_CASE("score and mask files round-trip") {
  TempDir dir;
  const std::vector<double> scores{0.25, -0.5, 0.125, 0.0};
  save_scores(dir / "scores.csv", scores);
  CHECK(load_scores(dir / "scores.csv") == scores);

  {
    std::ofstream out(dir / "shuffled.csv");
    out << "index,score\n2,0.5\n0,0.1\n1,0.2\n";
  }
  CHECK(load_scores(dir / "shuffled.csv") == std::vector<double>{0.1, 0.2, 0.5});
  {
    std::ofstream out(dir / "gap.csv");
    out << "0,0.1\n2,0.2\n";
  }
  CHECK_THROWS_AS(load_scores(dir / "gap.csv"), DataError);

  const VoxelMask mask = select_voxels(scores, 0.1);
  save_mask(dir / "mask.txt", mask);
  const VoxelMask back = load_mask(dir / "mask.txt");
  CHECK(back.selected == mask.selected);
  CHECK(back.count == mask.count);
  CHECK(back.threshold == mask.threshold);
}

TEST_CASE("retrieve_similar examples") {
  const FeatureDatabase db = FeatureDatabase::from_matrix(Matrix{{0, 0}, {1, 1}, {2, 2}});
  const std::vector<double> q{0.9, 0.9};
  const std::vector<Neighbor> top = retrieve_similar(q, db, 2);
  REQUIRE(top.size() == 2);
  CHECK(top[0].id == 1);
  CHECK(top[1].id == 0);
  CHECK(top[0].mse == doctest::Approx(0.01));
  CHECK(top[1].mse == doctest::Approx(0.81));

  const std::vector<double> self{2, 2};
  CHECK(retrieve_similar(self, db, 1)[0].id == 2);
  CHECK(retrieve_similar(self, db, 1)[0].mse == 0.0);
  CHECK(retrieve_similar(self, db, 10).size() == 3);

  // equidistant entries are ordered by id
  const FeatureDatabase tie({7, 3}, Matrix{{1, 0}, {-1, 0}});
  const std::vector<double> origin{0, 0};
  const std::vector<Neighbor> t = retrieve_similar(origin, tie, 2);
  CHECK(t[0].id == 3);
  CHECK(t[1].id == 7);

  CHECK_THROWS_AS(retrieve_similar(origin, db, 0), ConfigError);
  const std::vector<double> wide{1, 2, 3};
  CHECK_THROWS_AS(retrieve_similar(wide, db, 1), ShapeError);
  CHECK_THROWS_AS(FeatureDatabase({1, 1}, Matrix(2, 2)), DataError);
}

TEST_CASE("retrieval is sorted, exact, and finds every stored query") {
  const Matrix feats = random_matrix(200, 16, 5);
  const FeatureDatabase db = FeatureDatabase::from_matrix(feats);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<double> q = row_of(random_matrix(1, 16, 100 + seed), 0);
    const std::vector<Neighbor> top = retrieve_similar(q, db, 20);
    REQUIRE(top.size() == 20);
    for (std::size_t i = 0; i < top.size(); ++i) {
      if (i > 0) CHECK(top[i - 1].mse <= top[i].mse);
      double d = 0.0;
      for (std::size_t c = 0; c < 16; ++c) d += (feats(top[i].id, c) - q[c]) * (feats(top[i].id, c) - q[c]);
      CHECK(std::abs(d / 16.0 - top[i].mse) <= 1e-12);
    }
    // nothing outside the list is closer than its last entry
    for (std::size_t r = 0; r < feats.rows(); ++r) {
      bool listed = false;
      for (const Neighbor& n : top) listed = listed || n.id == r;
      if (!listed) CHECK(mean_squared_distance(feats.row(r), q) >= top.back().mse);
    }
  }
  for (std::size_t r = 0; r < feats.rows(); r += 37) {
    const std::vector<Neighbor> top = retrieve_similar(feats.row(r), db, 3);
    CHECK(top[0].id == r);
    CHECK(top[0].mse == 0.0);
  }
}

TEST_CASE("feature database file round-trips and rejects mixed widths") {
  TempDir dir;
  const FeatureDatabase db({10, 20, 30}, random_matrix(3, 4, 6), {"a.jpg", "", "c.jpg"});
  save_feature_database(dir / "db.ncfd", db);
  const FeatureDatabase back = load_feature_database(dir / "db.ncfd");
  CHECK(back.ids() == db.ids());
  CHECK(back.features() == db.features());
  CHECK(back.sources() == db.sources());

  save_feature_database(dir / "a.ncfd", FeatureDatabase::from_matrix(random_matrix(2, 3, 7)));
  save_feature_database(dir / "b.ncfd", FeatureDatabase({1}, random_matrix(1, 4, 8)));
  const std::string a = read_file(dir / "a.ncfd");
  const std::string b = read_file(dir / "b.ncfd");
  // header 24 bytes; record = id 8 + empty source 8 + 1x3 block 48
  write_file_atomic(dir / "mixed.ncfd", a.substr(0, 24 + 64) + b.substr(24));
  try {
    (void)load_feature_database(dir / "mixed.ncfd");
    FAIL("mixed-width database loaded");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("byte offset 104") != std::string::npos);
  }
  write_file_atomic(dir / "short.ncfd", a.substr(0, 50));
  CHECK_THROWS_AS(load_feature_database(dir / "short.ncfd"), DataError);
}

TEST_CASE("decode_brain is generate after predict") {
  const LanguageModel lm = toy_model(5, 9, 4, 6, 2.0);
  const Regressor reg = ridge_fit(random_matrix(30, 12, 10), random_matrix(30, 4, 11), {.lambda = 0.3});
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<double> brain = row_of(random_matrix(1, 12, 200 + seed), 0);
    const std::vector<double> feature = predict(reg, brain);
    for (std::optional<std::size_t> beam : {std::optional<std::size_t>{}, std::optional<std::size_t>{3}}) {
      DecodeOptions opt;
      opt.beam_width = beam;
      opt.generation.max_len = 6;
      const std::vector<Hypothesis> via = decode_brain(reg, lm, brain, opt);
      const std::vector<Hypothesis> direct = generate(lm, feature, opt);
      REQUIRE(via.size() == direct.size());
      for (std::size_t i = 0; i < via.size(); ++i) {
        CHECK(via[i].tokens == direct[i].tokens);
        CHECK(via[i].log_prob == direct[i].log_prob);
      }
    }
  }
  const Regressor narrow = ridge_fit(random_matrix(30, 12, 10), random_matrix(30, 3, 11));
  CHECK_THROWS_AS(decode_brain(narrow, lm, row_of(random_matrix(1, 12, 1), 0)), ShapeError);
}

TEST_CASE("identity regressor reproduces direct feature decoding") {
  const LanguageModel lm = toy_model(5, 12, 4, 6, 2.0);
  RidgeModel id;
  id.weight = Matrix::identity(4);
  id.bias = Matrix(1, 4);
  const Regressor reg = id;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::vector<double> f = row_of(random_matrix(1, 4, 300 + seed), 0);
    CHECK(decode_brain(reg, lm, f)[0].tokens == generate_greedy(lm, f).tokens);
  }
}

TEST_CASE("pseudo ground truth") {
  const Matrix feats = random_matrix(6, 3, 13);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const LanguageModel lm = toy_model(4, 400 + seed, 3, 4, 2.0);
    GenerationOptions opt;
    opt.max_len = 5;
    const auto single = make_pseudo_groundtruth(lm, feats, 1, opt);
    for (std::size_t r = 0; r < feats.rows(); ++r) {
      REQUIRE(single[r].size() == 1);
      CHECK(single[r][0] == generate_greedy(lm, feats.row(r), opt).tokens);
    }
  }

  // Width 3 keeps every live prefix when a single content token exists, and
  // when captions have one token all scores equal log-probabilities; in both
  // settings the beam is exact.
  struct Setting {
    std::size_t content;
    std::size_t max_len;
  };
  for (const Setting s : {Setting{1, 5}, Setting{3, 1}}) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const LanguageModel lm = toy_model(s.content, 500 + seed, 3, 4, 2.0);
      GenerationOptions opt;
      opt.max_len = s.max_len;
      const auto refs = make_pseudo_groundtruth(lm, feats, 3, opt);
      for (std::size_t r = 0; r < feats.rows(); ++r) {
        const auto all = oracle::enumerate_captions(lm, feats.row(r), s.max_len, false);
        REQUIRE(refs[r].size() == 3);
        for (std::size_t i = 0; i < 3; ++i) CHECK(refs[r][i] == all[i].tokens);
      }
    }
  }
  CHECK_THROWS_AS(make_pseudo_groundtruth(toy_model(2, 1), feats, 0), ConfigError);
}
