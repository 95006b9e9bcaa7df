#include "neurocap/regressors/regressor.hpp"

namespace neurocap {

std::size_t input_dim(const Regressor& model) {
  return std::visit([](const auto& m) { return m.input_dim(); }, model);
}

std::size_t output_dim(const Regressor& model) {
  return std::visit([](const auto& m) { return m.output_dim(); }, model);
}

Matrix predict(const Regressor& model, const Matrix& x) {
  return std::visit([&x](const auto& m) { return m.predict(x); }, model);
}

std::vector<double> predict(const Regressor& model, std::span<const double> x) {
  const Matrix out = predict(model, Matrix::row_vector(x));
  return {out.values().begin(), out.values().end()};
}

}  // namespace neurocap
