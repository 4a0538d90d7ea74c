#pragma once

#include <span>
#include <string>
#include <vector>

#include "seq2bf/tape.hpp"
#include "seq2bf/tensor.hpp"

namespace seq2bf {

/// Gated recurrent unit:
///   r  = sigmoid(W_r x + U_r h + b_r)
///   z  = sigmoid(W_z x + U_z h + b_z)
///   h~ = tanh(W_h x + U_h (r * h) + b_h)
///   h' = (1 - z) * h + z * h~
struct GruCell {
  Tensor w_r, w_z, w_h;  // hidden x input
  Tensor u_r, u_z, u_h;  // hidden x hidden
  Tensor b_r, b_z, b_h;  // hidden

  GruCell() = default;
  GruCell(size_t input_dim, size_t hidden_dim);

  size_t input_dim() const { return w_r.cols(); }
  size_t hidden_dim() const { return w_r.rows(); }

  void append_params(ParamList& out, const std::string& prefix);
};

Tape::Var gru_step(Tape& tape, const GruCell& cell, Tape::Var x, Tape::Var h_prev);

/// Non-recording convenience overload.
std::vector<double> gru_step(const GruCell& cell, std::span<const double> x, std::span<const double> h_prev);

}  // namespace seq2bf
