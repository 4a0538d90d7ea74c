#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "seq2bf/tensor.hpp"

namespace seq2bf {

/// rmsprop over dense parameters:
///   cache <- decay * cache + (1 - decay) * g^2
///   param <- param - learning_rate * g / sqrt(cache + epsilon)
struct RmspropState {
  double decay = 0.99;
  double epsilon = 1e-8;
  double learning_rate = 0.002;
  std::vector<std::vector<double>> cache;
};

/// Applies one update using each tensor's grad buffer. The cache is sized on
/// first use and must keep the same parameter order afterwards.
void rmsprop_step(RmspropState& state, std::span<const NamedTensor> params);

/// Plain SGD on the touched rows only; untouched rows keep their exact bits.
/// Clears the touched flags and the gradients of the updated rows.
void embedding_sgd_step(EmbeddingTable& table, double learning_rate);

/// Scales all gradients so their joint L2 norm is at most max_norm. Returns
/// the norm before scaling.
double clip_global_norm(std::span<const NamedTensor> params, double max_norm);

/// Embedding learning rate read literally as base rate / sqrt(epsilon):
/// 0.002 / sqrt(1e-8) = 20.
inline double literal_embedding_rate(double base_rate, double epsilon) { return base_rate / std::sqrt(epsilon); }

}  // namespace seq2bf
