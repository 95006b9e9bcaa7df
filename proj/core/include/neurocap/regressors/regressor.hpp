#pragma once

#include <span>
#include <variant>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/regressors/mlp.hpp"
#include "neurocap/regressors/ridge.hpp"

namespace neurocap {

/// Any brain -> feature mapping.
using Regressor = std::variant<RidgeModel, MlpModel>;

std::size_t input_dim(const Regressor& model);
std::size_t output_dim(const Regressor& model);

/// Row-wise prediction; deterministic and side-effect free.
Matrix predict(const Regressor& model, const Matrix& x);
/// Single-record prediction.
std::vector<double> predict(const Regressor& model, std::span<const double> x);

}  // namespace neurocap
