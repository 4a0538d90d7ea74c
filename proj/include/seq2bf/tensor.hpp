#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace seq2bf {

/// Row-major float32 parameter tensor with a float64 gradient buffer.
///
/// The gradient buffer is scratch space written by Tape::backward; it is
/// mutable so that forward passes can run against const models.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<float> values;
  mutable std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(std::vector<size_t> dims);

  size_t size() const { return values.size(); }
  size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }
  void zero_grad() const;
};

struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
};

using ParamList = std::vector<NamedTensor>;

size_t element_count(std::span<const size_t> shape);

/// Fills every entry i.i.d. uniform on [-range, range], visiting tensors and
/// entries in order so a seed fixes the result bit for bit.
void init_uniform(std::span<const NamedTensor> params, uint64_t seed, float range = 0.08f);

/// Allocates and initializes fresh tensors of the given shapes.
std::vector<Tensor> init_params(uint64_t seed, std::span<const std::vector<size_t>> shapes, float range = 0.08f);

/// Embedding matrix (rows x dim) with per-row touched flags for the
/// current batch.
struct EmbeddingTable {
  Tensor weight;
  mutable std::vector<uint8_t> touched;

  EmbeddingTable() = default;
  EmbeddingTable(size_t rows, size_t dim);

  size_t rows() const { return weight.rows(); }
  size_t dim() const { return weight.cols(); }
  void mark(size_t row) const { touched[row] = 1; }
  std::vector<size_t> touched_rows() const;
  void clear_touched() const;
};

}  // namespace seq2bf
