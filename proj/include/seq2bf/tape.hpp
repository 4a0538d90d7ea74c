#pragma once

#include <functional>
#include <span>
#include <vector>

#include "seq2bf/tensor.hpp"

namespace seq2bf {

struct SoftmaxXent {
  double loss = 0.0;
  std::vector<double> probs;
};

/// Max-shifted softmax and -log p[target].
SoftmaxXent softmax_xent(std::span<const double> logits, size_t target);

/// Reverse-accumulation tape over the small op set the encoder-decoder
/// needs: matrix-vector product, bias add, element-wise sigmoid/tanh/product/
/// add/sub, embedding gather and softmax cross-entropy.
///
/// Activations are float64; parameters are read from float32 tensors.
/// With recording off the tape only evaluates values, which is the
/// inference path.
class Tape {
 public:
  struct Var {
    size_t id = 0;
  };

  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }

  Var constant(std::vector<double> value);
  Var zeros(size_t n) { return constant(std::vector<double>(n, 0.0)); }

  /// Row lookup. Marks the row touched when its gradient is accumulated.
  Var gather(const EmbeddingTable& table, size_t row);
  /// W x for W of shape [rows, cols] and x of length cols.
  Var matvec(const Tensor& w, Var x);
  Var add_bias(Var a, const Tensor& bias);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var sigmoid(Var a);
  Var tanh(Var a);
  /// Scalar node holding -log softmax(logits)[target]; probabilities are
  /// copied to probs when given.
  Var softmax_xent(Var logits, size_t target, std::vector<double>* probs = nullptr);
  /// Scalar sum of scalar nodes, scaled.
  Var sum(std::span<const Var> scalars, double scale = 1.0);

  const std::vector<double>& value(Var v) const { return nodes_[v.id].value; }
  double scalar(Var v) const { return nodes_[v.id].value.at(0); }
  const std::vector<double>& grad(Var v) const { return nodes_[v.id].grad; }

  /// Seeds d(root)/d(root) = 1 and accumulates into every tensor gradient.
  void backward(Var root);

  size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    std::vector<double> value;
    std::vector<double> grad;
  };

  Var push(std::vector<double> value);
  std::vector<double>& g(size_t id) { return nodes_[id].grad; }
  void check_same(Var a, Var b, const char* op) const;

  bool record_;
  std::vector<Node> nodes_;
  std::vector<std::function<void()>> backward_ops_;
};

}  // namespace seq2bf
