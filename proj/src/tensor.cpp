#include "seq2bf/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "seq2bf/random.hpp"

namespace seq2bf {

size_t element_count(std::span<const size_t> shape) {
  return std::accumulate(shape.begin(), shape.end(), size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<size_t> dims)
    : shape(std::move(dims)), values(element_count(shape), 0.0f), grad(values.size(), 0.0) {}

void Tensor::zero_grad() const { std::fill(grad.begin(), grad.end(), 0.0); }

void init_uniform(std::span<const NamedTensor> params, uint64_t seed, float range) {
  Rng rng(seed);
  for (const auto& p : params) {
    for (float& v : p.tensor->values) {
      v = static_cast<float>(-static_cast<double>(range) + 2.0 * range * uniform_unit(rng));
    }
  }
}

std::vector<Tensor> init_params(uint64_t seed, std::span<const std::vector<size_t>> shapes, float range) {
  std::vector<Tensor> tensors;
  tensors.reserve(shapes.size());
  for (const auto& s : shapes) tensors.emplace_back(s);
  ParamList list;
  for (auto& t : tensors) list.push_back({"", &t});
  init_uniform(list, seed, range);
  return tensors;
}

EmbeddingTable::EmbeddingTable(size_t rows, size_t dim) : weight({rows, dim}), touched(rows, 0) {}

std::vector<size_t> EmbeddingTable::touched_rows() const {
  std::vector<size_t> rows_out;
  for (size_t r = 0; r < touched.size(); ++r) {
    if (touched[r]) rows_out.push_back(r);
  }
  return rows_out;
}

void EmbeddingTable::clear_touched() const { std::fill(touched.begin(), touched.end(), 0); }

}  // namespace seq2bf
