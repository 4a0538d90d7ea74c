#include "seq2bf/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "seq2bf/error.hpp"

namespace seq2bf {

SoftmaxXent softmax_xent(std::span<const double> logits, size_t target) {
  if (target >= logits.size()) throw ShapeError("softmax target out of range");
  SoftmaxXent out;
  out.probs.resize(logits.size());
  const double max = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - max);
    z += out.probs[i];
  }
  for (double& p : out.probs) p /= z;
  out.loss = -((logits[target] - max) - std::log(z));
  return out;
}

Tape::Var Tape::push(std::vector<double> value) {
  nodes_.push_back({std::move(value), {}});
  return Var{nodes_.size() - 1};
}

void Tape::check_same(Var a, Var b, const char* op) const {
  if (value(a).size() != value(b).size()) {
    throw ShapeError(std::string(op) + ": size mismatch " + std::to_string(value(a).size()) + " vs " +
                     std::to_string(value(b).size()));
  }
}

Tape::Var Tape::constant(std::vector<double> value) { return push(std::move(value)); }

Tape::Var Tape::gather(const EmbeddingTable& table, size_t row) {
  if (row >= table.rows()) throw EncodingError("token id " + std::to_string(row) + " outside embedding table");
  const size_t dim = table.dim();
  const float* src = table.weight.values.data() + row * dim;
  Var out = push(std::vector<double>(src, src + dim));
  if (record_) {
    backward_ops_.push_back([this, out, &table, row, dim] {
      const auto& go = g(out.id);
      double* dst = table.weight.grad.data() + row * dim;
      for (size_t i = 0; i < dim; ++i) dst[i] += go[i];
      table.mark(row);
    });
  }
  return out;
}

Tape::Var Tape::matvec(const Tensor& w, Var x) {
  const size_t rows = w.rows();
  const size_t cols = w.cols();
  if (value(x).size() != cols) {
    throw ShapeError("matvec: matrix has " + std::to_string(cols) + " columns, vector has " +
                     std::to_string(value(x).size()));
  }
  std::vector<double> y(rows, 0.0);
  const auto& xv = value(x);
  for (size_t r = 0; r < rows; ++r) {
    const float* wr = w.values.data() + r * cols;
    double acc = 0.0;
    for (size_t c = 0; c < cols; ++c) acc += static_cast<double>(wr[c]) * xv[c];
    y[r] = acc;
  }
  Var out = push(std::move(y));
  if (record_) {
    backward_ops_.push_back([this, out, x, &w, rows, cols] {
      const auto& go = g(out.id);
      const auto& xv = value(x);
      auto& gx = g(x.id);
      for (size_t r = 0; r < rows; ++r) {
        const double gr = go[r];
        if (gr == 0.0) continue;
        const float* wr = w.values.data() + r * cols;
        double* gw = w.grad.data() + r * cols;
        for (size_t c = 0; c < cols; ++c) {
          gw[c] += gr * xv[c];
          gx[c] += gr * static_cast<double>(wr[c]);
        }
      }
    });
  }
  return out;
}

Tape::Var Tape::add_bias(Var a, const Tensor& bias) {
  if (value(a).size() != bias.size()) throw ShapeError("add_bias: size mismatch");
  std::vector<double> y = value(a);
  for (size_t i = 0; i < y.size(); ++i) y[i] += bias.values[i];
  Var out = push(std::move(y));
  if (record_) {
    backward_ops_.push_back([this, out, a, &bias] {
      const auto& go = g(out.id);
      auto& ga = g(a.id);
      for (size_t i = 0; i < go.size(); ++i) {
        ga[i] += go[i];
        bias.grad[i] += go[i];
      }
    });
  }
  return out;
}

Tape::Var Tape::add(Var a, Var b) {
  check_same(a, b, "add");
  std::vector<double> y = value(a);
  const auto& bv = value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  Var out = push(std::move(y));
  if (record_) {
    backward_ops_.push_back([this, out, a, b] {
      const auto& go = g(out.id);
      auto& ga = g(a.id);
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      auto& gb = g(b.id);
      for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i];
    });
  }
  return out;
}

Tape::Var Tape::sub(Var a, Var b) {
  check_same(a, b, "sub");
  std::vector<double> y = value(a);
  const auto& bv = value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] -= bv[i];
  Var out = push(std::move(y));
  if (record_) {
    backward_ops_.push_back([this, out, a, b] {
      const auto& go = g(out.id);
      auto& ga = g(a.id);
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i];
      auto& gb = g(b.id);
      for (size_t i = 0; i < go.size(); ++i) gb[i] -= go[i];
    });
  }
  return out;
}

Tape::Var Tape::mul(Var a, Var b) {
  check_same(a, b, "mul");
  std::vector<double> y = value(a);
  const auto& bv = value(b);
  for (size_t i = 0; i < y.size(); ++i) y[i] *= bv[i];
  Var out = push(std::move(y));
  if (record_) {
    backward_ops_.push_back([this, out, a, b] {
      const auto& go = g(out.id);
      const auto& av = value(a);
      const auto& bv = value(b);
      auto& ga = g(a.id);
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
      auto& gb = g(b.id);
      for (size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
    });
  }
  return out;
}

Tape::Var Tape::sigmoid(Var a) {
  std::vector<double> y = value(a);
  for (double& v : y) v = 1.0 / (1.0 + std::exp(-v));
  Var out = push(std::move(y));
  if (record_) {
    backward_ops_.push_back([this, out, a] {
      const auto& go = g(out.id);
      const auto& yv = value(out);
      auto& ga = g(a.id);
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * yv[i] * (1.0 - yv[i]);
    });
  }
  return out;
}

Tape::Var Tape::tanh(Var a) {
  std::vector<double> y = value(a);
  for (double& v : y) v = std::tanh(v);
  Var out = push(std::move(y));
  if (record_) {
    backward_ops_.push_back([this, out, a] {
      const auto& go = g(out.id);
      const auto& yv = value(out);
      auto& ga = g(a.id);
      for (size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * (1.0 - yv[i] * yv[i]);
    });
  }
  return out;
}

Tape::Var Tape::softmax_xent(Var logits, size_t target, std::vector<double>* probs) {
  auto result = seq2bf::softmax_xent(value(logits), target);
  if (probs) *probs = result.probs;
  Var out = push({result.loss});
  if (record_) {
    backward_ops_.push_back([this, out, logits, target, p = std::move(result.probs)] {
      const double go = g(out.id)[0];
      auto& gl = g(logits.id);
      for (size_t i = 0; i < p.size(); ++i) gl[i] += go * p[i];
      gl[target] -= go;
    });
  }
  return out;
}

Tape::Var Tape::sum(std::span<const Var> scalars, double scale) {
  double total = 0.0;
  for (Var v : scalars) total += scalar(v);
  Var out = push({total * scale});
  if (record_) {
    backward_ops_.push_back([this, out, vars = std::vector<Var>(scalars.begin(), scalars.end()), scale] {
      const double go = g(out.id)[0] * scale;
      for (Var v : vars) g(v.id)[0] += go;
    });
  }
  return out;
}

void Tape::backward(Var root) {
  if (!record_) throw Error("backward called on a non-recording tape");
  for (auto& n : nodes_) n.grad.assign(n.value.size(), 0.0);
  nodes_[root.id].grad.assign(nodes_[root.id].value.size(), 1.0);
  for (auto it = backward_ops_.rbegin(); it != backward_ops_.rend(); ++it) (*it)();
}

}  // namespace seq2bf
