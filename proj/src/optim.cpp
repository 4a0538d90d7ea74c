#include "seq2bf/optim.hpp"

#include <cmath>

#include "seq2bf/error.hpp"

namespace seq2bf {

void rmsprop_step(RmspropState& state, std::span<const NamedTensor> params) {
  if (state.cache.empty()) {
    for (const auto& p : params) state.cache.emplace_back(p.tensor->size(), 0.0);
  }
  if (state.cache.size() != params.size()) throw ShapeError("rmsprop: parameter list changed");
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& t = *params[i].tensor;
    auto& cache = state.cache[i];
    if (cache.size() != t.size()) throw ShapeError("rmsprop: cache shape mismatch for " + params[i].name);
    for (size_t j = 0; j < t.size(); ++j) {
      const double g = t.grad[j];
      cache[j] = state.decay * cache[j] + (1.0 - state.decay) * g * g;
      t.values[j] = static_cast<float>(t.values[j] - state.learning_rate * g / std::sqrt(cache[j] + state.epsilon));
    }
  }
}

void embedding_sgd_step(EmbeddingTable& table, double learning_rate) {
  const size_t dim = table.dim();
  for (size_t row : table.touched_rows()) {
    float* w = table.weight.values.data() + row * dim;
    double* g = table.weight.grad.data() + row * dim;
    for (size_t i = 0; i < dim; ++i) {
      w[i] = static_cast<float>(w[i] - learning_rate * g[i]);
      g[i] = 0.0;
    }
  }
  table.clear_touched();
}

double clip_global_norm(std::span<const NamedTensor> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.tensor->grad) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (const auto& p : params) {
      for (double& g : p.tensor->grad) g *= scale;
    }
  }
  return norm;
}

}  // namespace seq2bf
