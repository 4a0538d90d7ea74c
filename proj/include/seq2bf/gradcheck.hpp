#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "seq2bf/tensor.hpp"

namespace seq2bf {

struct TensorGradError {
  std::string name;
  size_t checked = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::vector<TensorGradError> per_tensor;
};

struct GradCheckOptions {
  double step = 1e-3;
  /// Above this many entries in total, a random subsample of this size is
  /// checked instead.
  size_t max_entries = 10000;
  uint64_t seed = 1;
};

/// Compares reverse-accumulation gradients against central differences.
///
/// `loss(true)` must zero-and-fill each tensor's grad buffer and return the
/// loss; `loss(false)` only evaluates. The numeric derivative divides by the
/// actual float32 spacing between the perturbed values. Relative error is
/// |a - n| / max(|a|, |n|, 1e-8). Throws NumericalError naming the tensor
/// when a perturbed loss is not finite.
GradCheckReport grad_check(const std::function<double(bool with_grad)>& loss, std::span<const NamedTensor> params,
                           const GradCheckOptions& options = {});

}  // namespace seq2bf
