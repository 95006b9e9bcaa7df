#include "neurocap/mathcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "neurocap/errors.hpp"
#include "neurocap/mathcore/losses.hpp"

namespace neurocap {

std::string_view to_string(Activation act) {
  switch (act) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity" || name == "linear") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  throw ConfigError("unknown activation \"" + std::string(name) + "\"");
}

Matrix activate(const Matrix& x, Activation act) {
  Matrix out = x;
  switch (act) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::sigmoid:
      for (double& v : out.values()) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::tanh:
      for (double& v : out.values()) v = std::tanh(v);
      break;
  }
  return out;
}

Var Tape::push(Matrix value, bool needs_grad,
               std::function<void(Tape&, const Matrix&)> backward) {
  nodes_.push_back(Node{std::move(value), Matrix{}, std::move(backward), needs_grad});
  return Var{nodes_.size() - 1};
}

void Tape::accumulate(Var v, const Matrix& g) {
  Node& node = nodes_[v.index];
  if (!node.needs_grad) return;
  if (node.grad.empty() && node.value.size() != 0) {
    node.grad = g;
    return;
  }
  auto dst = node.grad.values();
  auto src = g.values();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

Var Tape::variable(Matrix value) {
  require_finite(value, "Tape::variable");
  return push(std::move(value), true, nullptr);
}

Var Tape::constant(Matrix value) {
  require_finite(value, "Tape::constant");
  return push(std::move(value), false, nullptr);
}

Var Tape::matmul(Var a, Var b) {
  Matrix out = neurocap::matmul(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Matrix& g) {
    if (t.needs(a)) t.accumulate(a, matmul_nt(g, t.value(b)));
    if (t.needs(b)) t.accumulate(b, matmul_tn(t.value(a), g));
  });
}

Var Tape::add(Var a, Var b) {
  Matrix out = neurocap::add(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Var Tape::subtract(Var a, Var b) {
  Matrix out = neurocap::subtract(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs(b)) t.accumulate(b, scaled(g, -1.0));
  });
}

Var Tape::hadamard(Var a, Var b) {
  Matrix out = neurocap::hadamard(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Matrix& g) {
    if (t.needs(a)) t.accumulate(a, neurocap::hadamard(g, t.value(b)));
    if (t.needs(b)) t.accumulate(b, neurocap::hadamard(g, t.value(a)));
  });
}

Var Tape::scale(Var a, double s) {
  return push(scaled(value(a), s), needs(a),
              [a, s](Tape& t, const Matrix& g) { t.accumulate(a, scaled(g, s)); });
}

Var Tape::add_row(Var x, Var bias) {
  Matrix out = neurocap::add_row(value(x), value(bias));
  return push(std::move(out), needs(x) || needs(bias), [x, bias](Tape& t, const Matrix& g) {
    t.accumulate(x, g);
    if (t.needs(bias)) t.accumulate(bias, column_sums(g));
  });
}

Var Tape::activation(Var x, Activation act) {
  require_finite(value(x), "Tape::activation");
  Matrix out = activate(value(x), act);
  const std::size_t self = nodes_.size();
  return push(std::move(out), needs(x), [x, act, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.nodes_[self].value;
    Matrix dx = g;
    auto d = dx.values();
    auto yv = y.values();
    switch (act) {
      case Activation::identity:
        break;
      case Activation::relu:
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = yv[i] > 0.0 ? d[i] : 0.0;
        break;
      case Activation::sigmoid:
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= yv[i] * (1.0 - yv[i]);
        break;
      case Activation::tanh:
        for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - yv[i] * yv[i];
        break;
    }
    t.accumulate(x, dx);
  });
}

Var Tape::slice_cols(Var x, std::size_t begin, std::size_t count) {
  const Matrix& in = value(x);
  if (begin + count > in.cols()) throw ShapeError("slice_cols: range exceeds columns");
  Matrix out(in.rows(), count);
  for (std::size_t r = 0; r < in.rows(); ++r) {
    std::copy_n(in.row(r).begin() + static_cast<std::ptrdiff_t>(begin), count,
                out.row(r).begin());
  }
  const std::size_t width = in.cols();
  return push(std::move(out), needs(x), [x, begin, count, width](Tape& t, const Matrix& g) {
    Matrix dx(g.rows(), width);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      std::copy_n(g.row(r).begin(), count,
                  dx.row(r).begin() + static_cast<std::ptrdiff_t>(begin));
    }
    t.accumulate(x, dx);
  });
}

Var Tape::gather_rows(Var table, std::span<const std::size_t> indices) {
  Matrix out = value(table).select_rows(indices);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  const std::size_t rows = value(table).rows();
  return push(std::move(out), needs(table),
              [table, idx = std::move(idx), rows](Tape& t, const Matrix& g) {
                Matrix dt(rows, g.cols());
                for (std::size_t i = 0; i < idx.size(); ++i) {
                  auto dst = dt.row(idx[i]);
                  auto src = g.row(i);
                  for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                }
                t.accumulate(table, dt);
              });
}

Var Tape::square(Var x) {
  Matrix out = neurocap::hadamard(value(x), value(x));
  return push(std::move(out), needs(x), [x](Tape& t, const Matrix& g) {
    t.accumulate(x, scaled(neurocap::hadamard(g, t.value(x)), 2.0));
  });
}

Var Tape::sum(Var x) {
  require_finite(value(x), "Tape::sum");
  Matrix out(1, 1, neurocap::sum(value(x)));
  return push(std::move(out), needs(x), [x](Tape& t, const Matrix& g) {
    const Matrix& in = t.value(x);
    t.accumulate(x, Matrix(in.rows(), in.cols(), g(0, 0)));
  });
}

Var Tape::mse(Var pred, const Matrix& target) {
  LossResult r = mse_loss(value(pred), target);
  return push(Matrix(1, 1, r.loss), needs(pred),
              [pred, grad = std::move(r.grad)](Tape& t, const Matrix& g) {
                t.accumulate(pred, scaled(grad, g(0, 0)));
              });
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const std::size_t> targets,
                                std::span<const double> weights) {
  LossResult r = neurocap::softmax_cross_entropy(value(logits), targets, weights);
  return push(Matrix(1, 1, r.loss), needs(logits),
              [logits, grad = std::move(r.grad)](Tape& t, const Matrix& g) {
                t.accumulate(logits, scaled(grad, g(0, 0)));
              });
}

void Tape::backward(Var loss) {
  const Matrix& out = value(loss);
  if (out.rows() != 1 || out.cols() != 1) {
    throw ShapeError("Tape::backward: loss must be 1x1");
  }
  for (Node& n : nodes_) n.grad = Matrix{};
  for (std::size_t i = 0; i <= loss.index; ++i) {
    if (nodes_[i].needs_grad) nodes_[i].grad = Matrix(nodes_[i].value.rows(), nodes_[i].value.cols());
  }
  nodes_[loss.index].grad = Matrix(1, 1, 1.0);
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad || !node.backward) continue;
    node.backward(*this, node.grad);
  }
}

}  // namespace neurocap
