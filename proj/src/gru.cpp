#include "seq2bf/gru.hpp"

#include "seq2bf/error.hpp"

namespace seq2bf {

GruCell::GruCell(size_t input_dim, size_t hidden_dim)
    : w_r({hidden_dim, input_dim}),
      w_z({hidden_dim, input_dim}),
      w_h({hidden_dim, input_dim}),
      u_r({hidden_dim, hidden_dim}),
      u_z({hidden_dim, hidden_dim}),
      u_h({hidden_dim, hidden_dim}),
      b_r({hidden_dim}),
      b_z({hidden_dim}),
      b_h({hidden_dim}) {}

void GruCell::append_params(ParamList& out, const std::string& prefix) {
  out.push_back({prefix + ".W_r", &w_r});
  out.push_back({prefix + ".W_z", &w_z});
  out.push_back({prefix + ".W_h", &w_h});
  out.push_back({prefix + ".U_r", &u_r});
  out.push_back({prefix + ".U_z", &u_z});
  out.push_back({prefix + ".U_h", &u_h});
  out.push_back({prefix + ".b_r", &b_r});
  out.push_back({prefix + ".b_z", &b_z});
  out.push_back({prefix + ".b_h", &b_h});
}

Tape::Var gru_step(Tape& tape, const GruCell& cell, Tape::Var x, Tape::Var h_prev) {
  if (tape.value(h_prev).size() != cell.hidden_dim()) throw ShapeError("gru_step: hidden state size mismatch");
  auto r = tape.sigmoid(tape.add_bias(tape.add(tape.matvec(cell.w_r, x), tape.matvec(cell.u_r, h_prev)), cell.b_r));
  auto z = tape.sigmoid(tape.add_bias(tape.add(tape.matvec(cell.w_z, x), tape.matvec(cell.u_z, h_prev)), cell.b_z));
  auto candidate = tape.tanh(
      tape.add_bias(tape.add(tape.matvec(cell.w_h, x), tape.matvec(cell.u_h, tape.mul(r, h_prev))), cell.b_h));
  // (1 - z) * h + z * h~  ==  h + z * (h~ - h)
  return tape.add(h_prev, tape.mul(z, tape.sub(candidate, h_prev)));
}

std::vector<double> gru_step(const GruCell& cell, std::span<const double> x, std::span<const double> h_prev) {
  Tape tape(false);
  auto xv = tape.constant({x.begin(), x.end()});
  auto hv = tape.constant({h_prev.begin(), h_prev.end()});
  return tape.value(gru_step(tape, cell, xv, hv));
}

}  // namespace seq2bf
