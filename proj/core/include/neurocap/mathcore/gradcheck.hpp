#pragma once

#include <functional>
#include <span>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"
#include "neurocap/mathcore/tape.hpp"

namespace neurocap {

/// Scalar function of one matrix argument, recorded on a tape. Must return
/// a 1 x 1 Var.
using TapeFunction = std::function<Var(Tape&, Var)>;

/// Scalar function of several matrix arguments (e.g. all layer weights).
using MultiTapeFunction = std::function<Var(Tape&, std::span<const Var>)>;

/// Relative discrepancy |a - n| / max(|a|, |n|, floor) used by the checks.
inline constexpr double kGradcheckFloor = 1e-4;

/// Worst relative error between the tape gradient of `f` at `x` and central
/// differences (f(x + eps) - f(x - eps)) / 2 eps, over all entries of `x`.
double finite_difference_check(const TapeFunction& f, const Matrix& x, double eps);

/// Same, over every entry of every argument.
double finite_difference_check(const MultiTapeFunction& f, const std::vector<Matrix>& args,
                               double eps);

}  // namespace neurocap
