#include "neurocap/mathcore/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "neurocap/errors.hpp"

namespace neurocap {
namespace {

double evaluate(const MultiTapeFunction& f, const std::vector<Matrix>& args) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(args.size());
  for (const Matrix& a : args) vars.push_back(tape.constant(a));
  const Var out = f(tape, vars);
  return tape.value(out)(0, 0);
}

}  // namespace

double finite_difference_check(const MultiTapeFunction& f, const std::vector<Matrix>& args,
                               double eps) {
  if (!(eps > 0.0)) throw NumericError("finite_difference_check: eps must be positive");

  Tape tape;
  std::vector<Var> vars;
  vars.reserve(args.size());
  for (const Matrix& a : args) vars.push_back(tape.variable(a));
  const Var out = f(tape, vars);
  tape.backward(out);

  double worst = 0.0;
  std::vector<Matrix> probe = args;
  for (std::size_t k = 0; k < args.size(); ++k) {
    const Matrix& analytic = tape.grad(vars[k]);
    auto values = probe[k].values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + eps;
      const double up = evaluate(f, probe);
      values[i] = saved - eps;
      const double down = evaluate(f, probe);
      values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.values()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kGradcheckFloor});
      worst = std::max(worst, std::abs(a - numeric) / denom);
    }
  }
  return worst;
}

double finite_difference_check(const TapeFunction& f, const Matrix& x, double eps) {
  const MultiTapeFunction wrapped = [&f](Tape& t, std::span<const Var> v) { return f(t, v[0]); };
  return finite_difference_check(wrapped, std::vector<Matrix>{x}, eps);
}

}  // namespace neurocap
