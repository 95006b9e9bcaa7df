#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "neurocap/mathcore/matrix.hpp"

namespace neurocap {

enum class Activation { identity, relu, sigmoid, tanh };

/// Applies `act` elementwise.
Matrix activate(const Matrix& x, Activation act);

std::string_view to_string(Activation act);
/// Inverse of to_string; throws ConfigError on an unknown name.
Activation parse_activation(std::string_view name);

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t index = 0;
};

/// Reverse-mode gradient tape.
///
/// Every operation appends a node holding its output value and a backward
/// rule. Nodes are appended in evaluation order, so walking them backwards
/// is a reverse topological order; backward() visits each node once.
/// A tape records one forward pass and is discarded afterwards.
class Tape {
 public:
  /// Leaf that receives a gradient.
  Var variable(Matrix value);
  /// Leaf with no gradient.
  Var constant(Matrix value);

  const Matrix& value(Var v) const { return nodes_[v.index].value; }
  /// Gradient of the last backward() target with respect to `v`.
  const Matrix& grad(Var v) const { return nodes_[v.index].grad; }
  std::size_t size() const noexcept { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var subtract(Var a, Var b);
  Var hadamard(Var a, Var b);
  Var scale(Var a, double s);
  /// Adds the 1 x cols row `bias` to every row of `x`.
  Var add_row(Var x, Var bias);
  Var activation(Var x, Activation act);
  Var relu(Var x) { return activation(x, Activation::relu); }
  Var sigmoid(Var x) { return activation(x, Activation::sigmoid); }
  Var tanh(Var x) { return activation(x, Activation::tanh); }
  /// Columns [begin, begin + count).
  Var slice_cols(Var x, std::size_t begin, std::size_t count);
  /// Rows of `table` picked by `indices`; backward scatter-adds.
  Var gather_rows(Var table, std::span<const std::size_t> indices);
  Var square(Var x);
  /// 1 x 1 sum of all entries.
  Var sum(Var x);
  /// 1 x 1 mean squared error against a constant target.
  Var mse(Var pred, const Matrix& target);
  /// 1 x 1 weighted mean softmax cross-entropy (see softmax_cross_entropy).
  Var softmax_cross_entropy(Var logits, std::span<const std::size_t> targets,
                            std::span<const double> weights);

  /// Seeds d loss / d loss = 1 and propagates to every node that needs it.
  /// `loss` must be 1 x 1.
  void backward(Var loss);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, const Matrix& out_grad)> backward;
    bool needs_grad = false;
  };

  Var push(Matrix value, bool needs_grad,
           std::function<void(Tape&, const Matrix& out_grad)> backward);
  bool needs(Var v) const { return nodes_[v.index].needs_grad; }
  void accumulate(Var v, const Matrix& g);

  std::vector<Node> nodes_;
};

}  // namespace neurocap
