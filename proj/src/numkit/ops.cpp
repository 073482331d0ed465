#include "slotnav/numkit/ops.hpp"

#include <algorithm>
#include <cmath>

#include "slotnav/error.hpp"

namespace slotnav::numkit {

Var linear(Tape& tape, Var x, Var w, Var b) {
  const Matrix& W = tape.value(w);
  const Matrix& B = tape.value(b);
  if (B.rows() != 1 || B.cols() != W.rows()) {
    fail(ErrorKind::Config, "linear: bias " + B.shape_string() + " does not match weight " +
                                W.shape_string());
  }
  if (tape.value(x).cols() != W.cols()) {
    fail(ErrorKind::Config, "linear: input " + tape.value(x).shape_string() +
                                " does not match weight " + W.shape_string());
  }
  return tape.add_row(tape.matmul_nt(x, w), b);
}

GruParams add_gru_params(ParamSet& set, const std::string& prefix, std::size_t dim, Rng& rng) {
  const double s = 1.0 / std::sqrt(static_cast<double>(dim));
  GruParams p;
  p.w_z = &set.add(prefix + ".w_z", random_normal(rng, dim, dim, s));
  p.u_z = &set.add(prefix + ".u_z", random_normal(rng, dim, dim, s));
  p.b_z = &set.add(prefix + ".b_z", Matrix(1, dim));
  p.w_r = &set.add(prefix + ".w_r", random_normal(rng, dim, dim, s));
  p.u_r = &set.add(prefix + ".u_r", random_normal(rng, dim, dim, s));
  p.b_r = &set.add(prefix + ".b_r", Matrix(1, dim));
  p.w_h = &set.add(prefix + ".w_h", random_normal(rng, dim, dim, s));
  p.u_h = &set.add(prefix + ".u_h", random_normal(rng, dim, dim, s));
  p.b_h = &set.add(prefix + ".b_h", Matrix(1, dim));
  return p;
}

GruVars bind(Tape& tape, const GruParams& p) {
  return {tape.param(*p.w_z), tape.param(*p.u_z), tape.param(*p.b_z),
          tape.param(*p.w_r), tape.param(*p.u_r), tape.param(*p.b_r),
          tape.param(*p.w_h), tape.param(*p.u_h), tape.param(*p.b_h)};
}

Var gru_cell(Tape& tape, Var h_prev, Var x, const GruVars& p) {
  const Matrix& H = tape.value(h_prev);
  const Matrix& X = tape.value(x);
  if (!H.same_shape(X)) {
    fail(ErrorKind::Config, "gru_cell: state " + H.shape_string() + " vs input " + X.shape_string());
  }
  Var z = tape.sigmoid(tape.add(linear(tape, x, p.w_z, p.b_z), tape.matmul_nt(h_prev, p.u_z)));
  Var r = tape.sigmoid(tape.add(linear(tape, x, p.w_r, p.b_r), tape.matmul_nt(h_prev, p.u_r)));
  Var candidate = tape.tanh(
      tape.add(linear(tape, x, p.w_h, p.b_h), tape.matmul_nt(tape.mul(r, h_prev), p.u_h)));
  Var keep = tape.affine(z, -1.0, 1.0);
  return tape.add(tape.mul(keep, candidate), tape.mul(z, h_prev));
}

Mlp2Params add_mlp2_params(ParamSet& set, const std::string& prefix, std::size_t in,
                           std::size_t hidden, std::size_t out, Rng& rng) {
  Mlp2Params p;
  p.w1 = &set.add(prefix + ".w1",
                  random_normal(rng, hidden, in, std::sqrt(2.0 / static_cast<double>(in))));
  p.b1 = &set.add(prefix + ".b1", Matrix(1, hidden));
  p.w2 = &set.add(prefix + ".w2",
                  random_normal(rng, out, hidden, 1.0 / std::sqrt(static_cast<double>(hidden))));
  p.b2 = &set.add(prefix + ".b2", Matrix(1, out));
  return p;
}

Mlp2Vars bind(Tape& tape, const Mlp2Params& p) {
  return {tape.param(*p.w1), tape.param(*p.b1), tape.param(*p.w2), tape.param(*p.b2)};
}

Var mlp2(Tape& tape, Var x, const Mlp2Vars& p, bool outer_relu) {
  Var hidden = tape.relu(linear(tape, x, p.w1, p.b1));
  Var out = linear(tape, hidden, p.w2, p.b2);
  return outer_relu ? tape.relu(out) : out;
}

Matrix softmax_rows(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto in = m.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out(r, j) = std::exp(in[j] - mx);
      total += out(r, j);
    }
    for (std::size_t j = 0; j < in.size(); ++j) out(r, j) /= total;
  }
  return out;
}

}  // namespace slotnav::numkit
