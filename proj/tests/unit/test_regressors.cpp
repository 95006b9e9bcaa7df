#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/gradcheck.hpp"
#include "neurocap/mathcore/losses.hpp"
#include "neurocap/regressors/autoencoder.hpp"
#include "neurocap/regressors/mlp.hpp"
#include "neurocap/regressors/regressor.hpp"
#include "neurocap/regressors/ridge.hpp"
#include "oracles.hpp"
#include "testing.hpp"

using namespace neurocap;
using neurocap::testing::random_matrix;

namespace {

RidgeOptions no_intercept(double lambda) {
  RidgeOptions o;
  o.lambda = lambda;
  o.fit_intercept = false;
  return o;
}

double ridge_objective(const Matrix& x, const Matrix& y, const Matrix& w, double lambda) {
  return squared_norm(subtract(matmul(x, w), y)) + lambda * squared_norm(w);
}

std::vector<Matrix> mlp_params(const MlpModel& m) {
  std::vector<Matrix> out;
  for (const DenseLayer& l : m.layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

}  // namespace

TEST_CASE("ridge examples") {
  const RidgeModel id = ridge_fit(Matrix::identity(3), Matrix::identity(3), no_intercept(0.0));
  CHECK(max_abs_diff(id.weight, Matrix::identity(3)) < 1e-14);

  const RidgeModel m = ridge_fit(Matrix{{1, 0}, {0, 2}}, Matrix{{1}, {2}}, no_intercept(0.5));
  CHECK(m.weight(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(m.weight(1, 0) == doctest::Approx(8.0 / 9.0).epsilon(1e-14));
  CHECK(RidgeOptions{}.lambda == 0.5);
}

TEST_CASE("ridge with lambda 0 on rank-deficient X is a solver error") {
  Matrix x = random_matrix(10, 3, 1);
  for (std::size_t r = 0; r < 10; ++r) x(r, 2) = x(r, 0) + x(r, 1);
  CHECK_THROWS_AS(ridge_fit(x, random_matrix(10, 2, 2), no_intercept(0.0)), SolverError);
  CHECK_NOTHROW(ridge_fit(x, random_matrix(10, 2, 2), no_intercept(0.1)));
}

TEST_CASE("ridge with lambda 0 solves the normal equations") {
  const Matrix x = random_matrix(30, 6, 3);
  const Matrix y = random_matrix(30, 2, 4);
  const RidgeModel m = ridge_fit(x, y, no_intercept(0.0));
  const Matrix residual = subtract(matmul(matmul_tn(x, x), m.weight), matmul_tn(x, y));
  CHECK(frobenius_norm(residual) < 1e-8);
}

TEST_CASE("ridge solution is the minimizer of the regularized objective") {
  const Matrix x = random_matrix(20, 5, 5);
  const Matrix y = random_matrix(20, 3, 6);
  const RidgeModel m = ridge_fit(x, y, no_intercept(0.7));
  const double best = ridge_objective(x, y, m.weight, 0.7);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Matrix w = add(m.weight, random_matrix(5, 3, 100 + s, 1e-3));
    CHECK(ridge_objective(x, y, w, 0.7) > best);
  }
}

TEST_CASE("ridge dual form matches the conjugate-gradient oracle") {
  const Matrix x = random_matrix(8, 20, 7);
  const Matrix y = random_matrix(8, 3, 8);
  const RidgeModel m = ridge_fit(x, y, no_intercept(0.5));
  CHECK(max_abs_diff(m.weight, oracle::cg_ridge(x, y, 0.5)) < 1e-9);
}

TEST_CASE("ridge intercept is unpenalized and satisfies the optimality conditions") {
  Matrix x = random_matrix(25, 4, 9);
  Matrix y = add_row(random_matrix(25, 2, 10), Matrix{{5.0, -3.0}});
  const RidgeModel m = ridge_fit(x, y, RidgeOptions{0.5, true, false});
  const Matrix r = subtract(m.predict(x), y);
  // d/dW: Xᵀr + λW = 0 and d/db: 1ᵀr = 0
  CHECK(max_abs(add(matmul_tn(x, r), scaled(m.weight, 0.5))) < 1e-10);
  CHECK(max_abs(column_sums(r)) < 1e-10);
}

TEST_CASE("ridge prediction matches the closed-form product") {
  const Matrix x = random_matrix(12, 4, 11);
  const RidgeModel m = ridge_fit(x, random_matrix(12, 2, 12));
  CHECK(max_abs_diff(m.predict(x), add_row(matmul(x, m.weight), m.bias)) == 0.0);
  const Regressor r = m;
  CHECK(predict(r, x) == predict(r, x));
  CHECK_THROWS_AS(predict(r, Matrix(1, 3)), ShapeError);

  RidgeModel eye;
  eye.weight = Matrix::identity(3);
  eye.bias = Matrix(1, 3);
  const Matrix probe = random_matrix(2, 3, 13);
  CHECK(eye.predict(probe) == probe);
  const std::vector<double> row(probe.row(0).begin(), probe.row(0).end());
  CHECK(predict(Regressor{eye}, row) == row);
}

TEST_CASE("standardizer") {
  Matrix x = random_matrix(10, 3, 14, 4.0);
  for (std::size_t r = 0; r < 10; ++r) x(r, 2) = 7.0;
  const Standardizer s = Standardizer::fit(x);
  const Matrix z = s.apply(x);
  const Matrix mean = column_means(z);
  CHECK(std::abs(mean(0, 0)) < 1e-12);
  CHECK(z(0, 2) == 0.0);
  CHECK(Standardizer{}.apply(x) == x);
}

TEST_CASE("mlp fits a realizable linear map") {
  const Matrix x = random_matrix(50, 4, 15);
  MlpOptions opt;
  opt.hidden = Activation::identity;
  SgdConfig cfg;
  cfg.learning_rate = 0.05;
  const MlpFit fit = mlp_fit(x, x, {4, 6, 4}, cfg, 400, 1, opt);
  CHECK(fit.log.epochs.back().train_mse < 1e-3);
}

TEST_CASE("zero-epoch mlp is the initial model") {
  const Matrix x = random_matrix(20, 5, 16);
  const Matrix y = random_matrix(20, 2, 17);
  const MlpFit fit = mlp_fit(x, y, {5, 7, 2}, SgdConfig{}, 0, 3);
  CHECK(fit.log.epochs.empty());
  CHECK(mlp_params(fit.model) ==
        mlp_params(make_mlp({5, 7, 2}, Activation::relu, InitScheme::scaled_normal, 3)));
  CHECK(fit.log.initial_train_mse == mse_loss(fit.model.predict(x), y).loss);
  CHECK_THROWS_AS(mlp_fit(x, y, {4, 2}, SgdConfig{}, 0, 3), ShapeError);
}

TEST_CASE("gradient-descent linear regression converges to the ridge solution") {
  const std::size_t n = 40;
  const std::size_t k = 2;
  const Matrix x = random_matrix(n, 3, 18);
  const Matrix y = add(matmul(x, random_matrix(3, k, 19)), random_matrix(n, k, 20, 0.1));
  SgdConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.clip_threshold = 100.0;
  cfg.l2 = 0.01;
  MlpOptions opt;
  opt.batch_size = n;
  const MlpFit fit = mlp_fit(x, y, {3, k}, cfg, 3000, 4, opt);
  // Stationary point of mean-squared loss + decay: λ = l2 * n * k / 2.
  const RidgeModel ridge = ridge_fit(x, y, RidgeOptions{cfg.l2 * n * k / 2.0, true, false});
  CHECK(max_abs_diff(fit.model.layers[0].weight, ridge.weight) < 1e-3);
  CHECK(max_abs_diff(fit.model.layers[0].bias, ridge.bias) < 1e-3);
}

TEST_CASE("mlp training is seed-deterministic and predict is pure") {
  const Matrix x = random_matrix(30, 6, 21);
  const Matrix y = random_matrix(30, 2, 22);
  const MlpFit a = mlp_fit(x, y, {6, 8, 2}, SgdConfig{}, 5, 9);
  const MlpFit b = mlp_fit(x, y, {6, 8, 2}, SgdConfig{}, 5, 9);
  CHECK(mlp_params(a.model) == mlp_params(b.model));
  CHECK(a.model.predict(x) == a.model.predict(x));
  const MlpFit c = mlp_fit(x, y, {6, 8, 2}, SgdConfig{}, 5, 10);
  CHECK(mlp_params(a.model) != mlp_params(c.model));
}

TEST_CASE("resuming mlp training reproduces the uninterrupted run") {
  const Matrix x = random_matrix(40, 5, 23);
  const Matrix y = random_matrix(40, 2, 24);
  const MlpFit full = mlp_fit(x, y, {5, 6, 2}, SgdConfig{}, 6, 11);
  MlpFit part = mlp_fit(x, y, {5, 6, 2}, SgdConfig{}, 3, 11);
  const TrainLog rest = fit_network(part.model, x, y, SgdConfig{}, 3, 3, 11, {});
  CHECK(mlp_params(part.model) == mlp_params(full.model));
  CHECK(rest.epochs.back().train_mse == full.log.epochs.back().train_mse);
}

TEST_CASE("network gradients match central differences") {
  const Matrix x = random_matrix(6, 5, 25, 0.5);
  const Matrix y = random_matrix(6, 3, 26, 0.5);
  for (const std::vector<std::size_t>& arch :
       {std::vector<std::size_t>{5, 7, 3}, std::vector<std::size_t>{5, 6, 5, 4, 3}}) {
    const MlpModel model = make_mlp(arch, Activation::relu, InitScheme::scaled_normal, 27);
    const MultiTapeFunction f = [&](Tape& t, std::span<const Var> p) {
      return record_mlp_loss(t, model, p, t.constant(x), y);
    };
    CHECK(finite_difference_check(f, mlp_params(model), 1e-6) < 1e-5);
  }
}

TEST_CASE("linear autoencoder reconstructs its input") {
  const Matrix x = random_matrix(40, 4, 28);
  SgdConfig cfg;
  cfg.learning_rate = 0.05;
  cfg.l2 = 0.0;
  AutoencoderOptions opt;
  opt.activation = Activation::identity;
  const AutoencoderStack stack = ae_pretrain(x, {6}, 600, cfg, 2, opt);
  CHECK(stack.loss_curves[0].back() < 1e-4);
  CHECK(AutoencoderOptions{}.activation == Activation::relu);
}

TEST_CASE("autoencoder loss curves are non-increasing after warm-up") {
  const Matrix x = random_matrix(64, 12, 29);
  const AutoencoderStack stack = ae_pretrain(x, {8, 6}, 60, SgdConfig{}, 3);
  REQUIRE(stack.loss_curves.size() == 2);
  CHECK(stack.hidden_dims() == std::vector<std::size_t>{8, 6});
  for (const std::vector<double>& curve : stack.loss_curves) {
    REQUIRE(curve.size() == 60);
    for (std::size_t e = 11; e < curve.size(); ++e) CHECK(curve[e] <= curve[e - 1] * 1.01);
  }
}

TEST_CASE("dnn fine-tuning from a stack") {
  const Matrix x = random_matrix(32, 10, 30);
  const Matrix y = random_matrix(32, 3, 31);
  const AutoencoderStack stack = ae_pretrain(x, {8, 6, 4}, 5, SgdConfig{}, 4);
  const MlpFit fit = dnn_fit(x, y, {10, 8, 6, 4, 3}, &stack, SgdConfig{}, 0, 5);
  CHECK(fit.model.layers[0].weight == stack.encoders[0].weight);
  CHECK(fit.model.layers[2].weight == stack.encoders[2].weight);
  CHECK_THROWS_AS(dnn_fit(x, y, {10, 8, 5, 4, 3}, &stack, SgdConfig{}, 1, 5), ShapeError);
  CHECK_THROWS_AS(dnn_fit(x, y, {10, 8, 6, 3}, &stack, SgdConfig{}, 1, 5), ShapeError);
}

TEST_CASE("zero targets with zero init stay at zero loss") {
  const Matrix x = random_matrix(20, 6, 32);
  MlpOptions opt;
  opt.init = InitScheme::zeros;
  const MlpFit fit = dnn_fit(x, Matrix(20, 2), {6, 5, 4, 3, 2}, nullptr, SgdConfig{}, 5, 6, opt);
  CHECK(fit.log.initial_train_mse == 0.0);
  for (const EpochRecord& r : fit.log.epochs) {
    CHECK(r.train_loss == 0.0);
    CHECK(r.train_mse == 0.0);
  }
}

TEST_CASE("non-finite training loss is a numeric error") {
  Matrix x = random_matrix(10, 3, 33, 1e150);
  SgdConfig cfg;
  cfg.clip_threshold = 1e300;
  cfg.learning_rate = 1e10;
  MlpOptions opt;
  opt.init = InitScheme::standard_normal;
  CHECK_THROWS_AS(mlp_fit(x, scaled(x, 1e100), {3, 4, 3}, cfg, 3, 1, opt), NumericError);
}
